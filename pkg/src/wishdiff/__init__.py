"""Spectral statistics for weighted differences of complex Wishart matrices.

Exact finite-dimension densities, correlation kernels, positivity
probabilities and moments in arbitrary-precision rational arithmetic; a
large-dimension asymptotic density from the cubic satisfied by the Stieltjes
transform; a Monte Carlo simulator for validation; and closed-form fixtures
for the difference of two random density matrices.
"""

from .diagonal_law import EnsembleParams
from .errors import (
    DomainError,
    InternalConsistencyError,
    NumericError,
    UnsupportedParametersError,
)

__all__ = [
    "EnsembleParams",
    "DomainError",
    "InternalConsistencyError",
    "NumericError",
    "UnsupportedParametersError",
]

__version__ = "0.1.0"
