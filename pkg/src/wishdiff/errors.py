"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the domain an operation is defined on."""


class UnsupportedParametersError(Exception):
    """A parameter combination is valid but not served by this implementation."""


class InternalConsistencyError(RuntimeError):
    """Two supposedly-identical computation routes disagreed (a build bug)."""


class NumericError(RuntimeError):
    """A floating-point procedure failed to converge or lost its branch."""
