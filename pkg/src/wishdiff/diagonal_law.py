"""Law of a diagonal element of the weighted Wishart difference.

A diagonal element is a weighted difference of two independent gamma
variables.  Its density w is a piecewise exponential-polynomial, smooth
enough at zero that a whole ladder of derivatives exists; those derivatives
are the basis functions the correlation kernel is built from.  Both the
density and each derivative have exact closed forms (finite Laguerre sums),
which this module constructs term by term.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath
from gmpy2 import mpq
from mpmath import mp

from .errors import DomainError, InternalConsistencyError
from .exppoly import ExpPolyTerm, PiecewiseExpPoly
from .specfun import (
    DEFAULT_PRECISION,
    Rational,
    as_rational,
    binomial,
    gamma_int,
    hyp2f1_terminating,
    laguerre_coeffs,
    to_bigfloat,
)


@dataclass(frozen=True)
class EnsembleParams:
    """Dimension, degrees of freedom, and weights of the two Wishart factors.

    Requires n <= n1 and n <= n2 (otherwise the constituent densities are not
    normalizable) and positive weights.
    """

    n: int
    n1: int
    n2: int
    a1: Rational
    a2: Rational

    def __post_init__(self):
        object.__setattr__(self, "a1", as_rational(self.a1))
        object.__setattr__(self, "a2", as_rational(self.a2))
        if self.n < 1:
            raise DomainError(f"matrix dimension must be positive, got {self.n}")
        if self.n1 < self.n or self.n2 < self.n:
            raise DomainError(
                f"degrees of freedom must be >= dimension: "
                f"n={self.n}, n1={self.n1}, n2={self.n2}"
            )
        if self.a1 <= 0 or self.a2 <= 0:
            raise DomainError("weights a1, a2 must be positive")

    def swapped(self) -> "EnsembleParams":
        """Exchange the two constituents (mirrors the spectrum)."""
        return EnsembleParams(self.n, self.n2, self.n1, self.a2, self.a1)


def max_derivative_order(params: EnsembleParams) -> int:
    """Largest j for which the (j-1)-th derivative of w exists at zero."""
    return params.n1 + params.n2 - 1


def build_w(params: EnsembleParams) -> PiecewiseExpPoly:
    """Exact density of one diagonal element of the weighted difference."""
    n1, n2, a1, a2 = params.n1, params.n2, params.a1, params.a2
    neg = []
    for nu in range(1, n2 + 1):
        coeff = (
            binomial(n1 + n2 - nu - 1, n1 - 1)
            * a1 ** (n2 - nu)
            * a2 ** (n1 - nu)
            / (a1 + a2) ** (n1 + n2 - nu)
            / gamma_int(nu)
        )
        if nu % 2 == 0:
            coeff = -coeff
        neg.append(ExpPolyTerm(coeff, nu - 1, 1 / a2))
    pos = []
    for nu in range(1, n1 + 1):
        coeff = (
            binomial(n1 + n2 - nu - 1, n2 - 1)
            * a1 ** (n2 - nu)
            * a2 ** (n1 - nu)
            / (a1 + a2) ** (n1 + n2 - nu)
            / gamma_int(nu)
        )
        pos.append(ExpPolyTerm(coeff, nu - 1, -1 / a1))
    at_zero = (
        gamma_int(n1 + n2 - 1)
        / (gamma_int(n1) * gamma_int(n2))
        * a1 ** (n2 - 1)
        * a2 ** (n1 - 1)
        / (a1 + a2) ** (n1 + n2 - 1)
    )
    return PiecewiseExpPoly(neg, pos, at_zero)


def char_fn(params: EnsembleParams, kappa, prec: int | None = None) -> mpmath.mpc:
    """Characteristic function of a diagonal element.

    Evaluates both the product form and its partial-fraction expansion and
    checks they agree before returning the product form; a disagreement would
    mean a build bug, not bad input.
    """
    if prec is None:
        prec = DEFAULT_PRECISION
    n1, n2, a1, a2 = params.n1, params.n2, params.a1, params.a2
    with mp.workprec(prec):
        k = mp.mpc(to_bigfloat(kappa, prec)) if not isinstance(kappa, mpmath.mpc) else kappa
        a1f = to_bigfloat(a1, prec)
        a2f = to_bigfloat(a2, prec)
        product = (1 - 1j * a1f * k) ** (-n1) * (1 + 1j * a2f * k) ** (-n2)

        total = mp.mpc(0)
        for nu in range(1, n1 + 1):
            c = (
                binomial(n1 + n2 - nu - 1, n2 - 1)
                * a1 ** n2
                * a2 ** (n1 - nu)
                / (a1 + a2) ** (n1 + n2 - nu)
            )
            total += to_bigfloat(c, prec) * (1 - 1j * a1f * k) ** (-nu)
        for nu in range(1, n2 + 1):
            c = (
                binomial(n1 + n2 - nu - 1, n1 - 1)
                * a2 ** n1
                * a1 ** (n2 - nu)
                / (a1 + a2) ** (n1 + n2 - nu)
            )
            total += to_bigfloat(c, prec) * (1 + 1j * a2f * k) ** (-nu)

        tol = mp.mpf(2) ** (20 - prec) * (1 + abs(product))
        if abs(product - total) > tol:
            raise InternalConsistencyError(
                f"characteristic function forms disagree at kappa={kappa}: "
                f"{product} vs {total}"
            )
        return +product


def build_ftilde(params: EnsembleParams, j: int) -> PiecewiseExpPoly:
    """Exact (j-1)-th derivative of w from the Laguerre closed forms.

    Valid for 1 <= j <= n1 + n2 - 1; beyond that w is no longer smooth at
    zero and the request is rejected.
    """
    n1, n2, a1, a2 = params.n1, params.n2, params.a1, params.a2
    if not 1 <= j <= max_derivative_order(params):
        raise DomainError(
            f"derivative order j={j} outside 1..{max_derivative_order(params)} "
            f"(w is only {n1 + n2 - 2}-times differentiable)"
        )
    neg = []
    for nu in range(1, n2 + 1):
        prefac = (
            binomial(n1 + n2 - nu - 1, n1 - 1)
            * a1 ** (n2 - nu)
            * a2 ** (n1 - j)
            / (a1 + a2) ** (n1 + n2 - nu)
        )
        if nu % 2 == 0:
            prefac = -prefac
        # expand L_{nu-1}^{(j-nu)}(-x/a2): substitute u = -x/a2 term by term
        for i, c in enumerate(laguerre_coeffs(nu - 1, j - nu)):
            coeff = prefac * c * (-1 / a2) ** i
            neg.append(ExpPolyTerm(coeff, i, 1 / a2))
    pos = []
    for nu in range(1, n1 + 1):
        prefac = (
            binomial(n1 + n2 - nu - 1, n2 - 1)
            * a1 ** (n2 - j)
            * a2 ** (n1 - nu)
            / (a1 + a2) ** (n1 + n2 - nu)
        )
        if (nu - j) % 2:
            prefac = -prefac
        for i, c in enumerate(laguerre_coeffs(nu - 1, j - nu)):
            coeff = prefac * c * (1 / a1) ** i
            pos.append(ExpPolyTerm(coeff, i, -1 / a1))
    return PiecewiseExpPoly(neg, pos, ftilde_at_zero(params, j))


def ftilde_at_zero(params: EnsembleParams, j: int, form: str = "left") -> Rational:
    """Value of the (j-1)-th derivative of w at zero, by either closed form.

    ``form="left"`` uses the limit taken from the negative side and
    ``form="right"`` the one from the positive side; they coincide exactly
    whenever j <= n1 + n2 - 1.
    """
    n1, n2, a1, a2 = params.n1, params.n2, params.a1, params.a2
    base = gamma_int(n1 + n2 - 1) / (gamma_int(n1) * gamma_int(n2))
    if form == "left":
        return (
            base
            * a1 ** (n2 - 1)
            * a2 ** (n1 - j)
            / (a1 + a2) ** (n1 + n2 - 1)
            * hyp2f1_terminating(1 - n2, 1 - j, 2 - n1 - n2, (a1 + a2) / a1)
        )
    if form == "right":
        sign = mpq(-1) if j % 2 == 0 else mpq(1)
        return (
            base
            * sign
            * a1 ** (n2 - j)
            * a2 ** (n1 - 1)
            / (a1 + a2) ** (n1 + n2 - 1)
            * hyp2f1_terminating(1 - n1, 1 - j, 2 - n1 - n2, (a1 + a2) / a2)
        )
    raise DomainError(f"form must be 'left' or 'right', got {form!r}")


def check_smoothness(params: EnsembleParams, j: int) -> bool:
    """Whether the (j-1)-th left and right derivatives of w agree at zero.

    Exact rational comparison of the two terminating hypergeometric closed
    forms; true exactly for j <= n1 + n2 - 1.
    """
    if j < 2:
        raise DomainError(f"smoothness check needs j >= 2, got {j}")
    return ftilde_at_zero(params, j, "left") == ftilde_at_zero(params, j, "right")


@dataclass(frozen=True)
class DiagonalLaw:
    """The weight w and its derivative ladder for one parameter set."""

    params: EnsembleParams
    w: PiecewiseExpPoly
    ftilde: tuple[PiecewiseExpPoly, ...]

    def basis(self, j: int) -> PiecewiseExpPoly:
        """The (j-1)-th derivative of w, 1-indexed like the closed forms."""
        return self.ftilde[j - 1]


@lru_cache(maxsize=64)
def _cached_law(params: EnsembleParams, count: int) -> DiagonalLaw:
    w = build_w(params)
    ftilde = tuple(build_ftilde(params, j) for j in range(1, count + 1))
    return DiagonalLaw(params, w, ftilde)


def build_diagonal_law(params: EnsembleParams, count: int | None = None) -> DiagonalLaw:
    """Construct w and the first ``count`` basis functions (default n)."""
    if count is None:
        count = params.n
    if count > max_derivative_order(params):
        raise DomainError(
            f"requested {count} basis functions but only "
            f"{max_derivative_order(params)} exist"
        )
    return _cached_law(params, count)
