"""Exact positivity probabilities and spectral moments.

The probability that every eigenvalue is positive, the expected fraction of
positive eigenvalues, and arbitrary integer spectral moments all reduce to
determinants built from the half-line and extended columns of the moment
matrix.  Every quantity is an exact rational, and each one is recomputed from
the density exp-poly as an independent route before being returned.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from .diagonal_law import EnsembleParams
from .errors import DomainError, InternalConsistencyError, UnsupportedParametersError
from .exact_spectral import (
    MomentMatrix,
    build_moment_matrix,
    density,
    normalization,
    rational_det,
)
from .specfun import Rational, gamma_int

#: Moment orders above this need an explicit opt-in (rational growth).
DEFAULT_GAMMA_CAP = 12


@dataclass(frozen=True)
class PositivityReport:
    """All-eigenvalue and generic-eigenvalue positivity probabilities."""

    p_all_pos: Rational
    p_all_neg: Rational
    frac_pos: Rational
    frac_neg: Rational


def _column_replacement_sum(mm: MomentMatrix, replacement) -> Rational:
    """Sum over i of det(square block with column i replaced).

    ``replacement[j][i]`` supplies the replaced entry in row j, column i.
    """
    n = mm.n
    block = [list(row[:n]) for row in mm.entries]
    total = mpq(0)
    for i in range(n):
        saved = [block[j][i] for j in range(n)]
        for j in range(n):
            block[j][i] = replacement[j][i]
        total += rational_det(block)
        for j in range(n):
            block[j][i] = saved[j]
    return total


def prob_all_positive(params: EnsembleParams) -> Rational:
    """Probability that the whole spectrum is positive."""
    mm = build_moment_matrix(params)
    value = (
        gamma_int(mm.n + 1) * normalization(mm) * rational_det(mm.square_block("pos"))
    )
    if not 0 <= value <= 1:
        raise InternalConsistencyError(f"positivity probability {value} outside [0,1]")
    return value


def prob_all_negative(params: EnsembleParams) -> Rational:
    """Probability that the whole spectrum is negative."""
    mm = build_moment_matrix(params)
    value = (
        gamma_int(mm.n + 1) * normalization(mm) * rational_det(mm.square_block("neg"))
    )
    if not 0 <= value <= 1:
        raise InternalConsistencyError(f"negativity probability {value} outside [0,1]")
    return value


def frac_positive(params: EnsembleParams) -> Rational:
    """Expected fraction of positive eigenvalues (column-replacement sum).

    Cross-checked exactly against the positive-side integral of the density.
    """
    mm = build_moment_matrix(params)
    value = (
        gamma_int(mm.n)
        * normalization(mm)
        * _column_replacement_sum(mm, mm.entries_pos)
    )
    direct = density(params).moment_integral(0, "pos")
    if value != direct:
        raise InternalConsistencyError(
            f"frac_positive determinant sum {value} disagrees with the "
            f"density integral {direct}"
        )
    return value


def frac_negative(params: EnsembleParams) -> Rational:
    """Expected fraction of negative eigenvalues."""
    mm = build_moment_matrix(params)
    value = (
        gamma_int(mm.n)
        * normalization(mm)
        * _column_replacement_sum(mm, mm.entries_neg)
    )
    direct = density(params).moment_integral(0, "neg")
    if value != direct:
        raise InternalConsistencyError(
            f"frac_negative determinant sum {value} disagrees with the "
            f"density integral {direct}"
        )
    return value


def positivity_report(params: EnsembleParams) -> PositivityReport:
    return PositivityReport(
        prob_all_positive(params),
        prob_all_negative(params),
        frac_positive(params),
        frac_negative(params),
    )


def _shifted_columns(mm: MomentMatrix, gamma: int, which: str, sign: int = 1):
    n = mm.n
    neg = mm.entries_neg
    pos = mm.entries_pos
    if which == "both":
        return [[neg[j][i + gamma] + pos[j][i + gamma] for i in range(n)] for j in range(n)]
    if which == "abs":
        return [
            [pos[j][i + gamma] + sign * neg[j][i + gamma] for i in range(n)]
            for j in range(n)
        ]
    raise DomainError(f"unknown column kind {which!r}")


def _check_gamma(params: EnsembleParams, gamma: int, gamma_cap: int):
    if gamma < 0:
        raise DomainError(f"moment order must be nonnegative, got {gamma}")
    if gamma > gamma_cap:
        raise UnsupportedParametersError(
            f"moment order {gamma} above the cap {gamma_cap}; pass a larger "
            f"gamma_cap to allow it"
        )


def moment(params: EnsembleParams, gamma: int, gamma_cap: int = DEFAULT_GAMMA_CAP) -> Rational:
    """Exact spectral moment of order gamma.

    Computed as a column-replacement determinant sum over moment columns
    shifted by gamma, and verified against the direct integral of
    x^gamma times the density.
    """
    _check_gamma(params, gamma, gamma_cap)
    mm = build_moment_matrix(params, extra_cols=gamma)
    value = (
        gamma_int(mm.n)
        * normalization(mm)
        * _column_replacement_sum(mm, _shifted_columns(mm, gamma, "both"))
    )
    direct = density(params).moment_integral(gamma, "both")
    if value != direct:
        raise InternalConsistencyError(
            f"moment({gamma}) determinant sum {value} disagrees with the "
            f"density integral {direct}"
        )
    return value


def abs_moment(params: EnsembleParams, gamma: int, gamma_cap: int = DEFAULT_GAMMA_CAP) -> Rational:
    """Exact moment of |x|^gamma; equals the plain moment for even gamma."""
    _check_gamma(params, gamma, gamma_cap)
    mm = build_moment_matrix(params, extra_cols=gamma)
    sign = -1 if gamma % 2 else 1
    value = (
        gamma_int(mm.n)
        * normalization(mm)
        * _column_replacement_sum(mm, _shifted_columns(mm, gamma, "abs", sign))
    )
    d = density(params)
    direct = d.moment_integral(gamma, "pos") + (-1) ** gamma * d.moment_integral(
        gamma, "neg"
    )
    if value != direct:
        raise InternalConsistencyError(
            f"abs_moment({gamma}) determinant sum {value} disagrees with the "
            f"density integral {direct}"
        )
    return value
