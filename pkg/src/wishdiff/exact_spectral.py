"""Exact moment matrix, correlation kernel, and spectral density.

The derivative basis from ``diagonal_law`` has an upper-triangular matrix of
power moments with exact rational entries.  Inverting that triangle gives the
kernel coefficients, and with them the spectral density as a closed-form
piecewise exponential-polynomial and every r-point correlation function as a
small determinant.

A second, fully independent route to the same density (half-line quadrature
for the basis functions, convergent hypergeometric series for the moments,
all in extended-precision floating point) lives in :class:`Oracle1` and is
used only to cross-check the exact path.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath
from gmpy2 import mpq
from mpmath import mp

from .diagonal_law import DiagonalLaw, EnsembleParams, build_diagonal_law
from .errors import DomainError, InternalConsistencyError
from .exppoly import PiecewiseExpPoly
from .specfun import (
    DEFAULT_PRECISION,
    Rational,
    binomial,
    gamma_int,
    hyp2f1_series,
    hyp2f1_terminating,
    pochhammer,
    to_bigfloat,
)

# -- rational linear algebra -------------------------------------------------


def rational_det(rows) -> Rational:
    """Exact determinant by fraction-free-enough Gaussian elimination."""
    m = [list(r) for r in rows]
    n = len(m)
    det = mpq(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return mpq(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            if m[r][col] == 0:
                continue
            factor = m[r][col] * inv
            for c in range(col, n):
                m[r][c] -= factor * m[col][c]
    return det


def upper_triangular_inverse(rows) -> tuple[tuple[Rational, ...], ...]:
    """Exact inverse of an upper-triangular rational matrix."""
    n = len(rows)
    inv = [[mpq(0)] * n for _ in range(n)]
    for j in range(n):
        if rows[j][j] == 0:
            raise DomainError("singular triangular matrix (zero diagonal)")
        inv[j][j] = 1 / rows[j][j]
        for i in range(j - 1, -1, -1):
            s = mpq(0)
            for k in range(i + 1, j + 1):
                s += rows[i][k] * inv[k][j]
            inv[i][j] = -s / rows[i][i]
    return tuple(tuple(r) for r in inv)


# -- moment matrix ------------------------------------------------------------


@dataclass(frozen=True)
class MomentMatrix:
    """Half-line and full power moments of the derivative basis.

    ``entries[j][k]`` (0-indexed) is the integral of x^k times the j-th basis
    function; it vanishes for j > k, so the square block is upper triangular.
    Columns beyond n exist to serve spectral moments of that order.
    """

    params: EnsembleParams
    cols: int
    entries_neg: tuple[tuple[Rational, ...], ...]
    entries_pos: tuple[tuple[Rational, ...], ...]
    entries: tuple[tuple[Rational, ...], ...]

    @property
    def n(self) -> int:
        return self.params.n

    def square_block(self, which: str = "both") -> tuple[tuple[Rational, ...], ...]:
        src = {
            "both": self.entries,
            "neg": self.entries_neg,
            "pos": self.entries_pos,
        }[which]
        return tuple(row[: self.n] for row in src)


def _closed_form_entry(params: EnsembleParams, j: int, k: int, side: str) -> Rational:
    """Terminating-hypergeometric closed form of one half-line moment.

    Valid for every (j, k); below the diagonal the two half-line moments are
    individually nonzero and cancel only in the sum.
    """
    n1, n2, a1, a2 = params.n1, params.n2, params.a1, params.a2
    base = (
        gamma_int(k)
        * gamma_int(n1 + n2 - 1)
        / (gamma_int(n1) * gamma_int(n2))
        / (a1 + a2) ** (n1 + n2 - 1)
    )
    if side == "neg":
        value = (
            base
            * a1 ** (n2 - 1)
            * a2 ** (n1 - j + k)
            * hyp2f1_terminating(1 - n2, 1 - j + k, 2 - n1 - n2, (a1 + a2) / a1)
        )
        return -value if k % 2 == 0 else value
    value = (
        base
        * a1 ** (n2 - j + k)
        * a2 ** (n1 - 1)
        * hyp2f1_terminating(1 - n1, 1 - j + k, 2 - n1 - n2, (a1 + a2) / a2)
    )
    return -value if j % 2 == 0 else value


def _nu_sum_entry(params: EnsembleParams, j: int, k: int, side: str) -> Rational:
    """Binomial-factored finite-sum form of a half-line moment, j <= k only.

    Below the diagonal this expression is identically zero and stops being a
    formula for the half-line moment; only the summed matrix vanishes there.
    """
    if j > k:
        raise DomainError("the binomial-factored sum only represents j <= k entries")
    n1, n2, a1, a2 = params.n1, params.n2, params.a1, params.a2
    picker = binomial(k - 1, j - 1)
    total = mpq(0)
    if side == "neg":
        for nu in range(1, n2 + 1):
            total += (
                binomial(n1 + n2 - nu - 1, n1 - 1)
                * a1 ** (n2 - nu)
                / (a1 + a2) ** (n1 + n2 - nu)
                * gamma_int(nu + k - j)
                / gamma_int(nu)
            )
        total *= picker * gamma_int(j) * a2 ** (n1 + k - j)
        return -total if k % 2 == 0 else total
    for nu in range(1, n1 + 1):
        total += (
            binomial(n1 + n2 - nu - 1, n2 - 1)
            * a2 ** (n1 - nu)
            / (a1 + a2) ** (n1 + n2 - nu)
            * gamma_int(nu + k - j)
            / gamma_int(nu)
        )
    total *= picker * gamma_int(j) * a1 ** (n2 + k - j)
    return -total if j % 2 == 0 else total


@lru_cache(maxsize=64)
def _cached_moment_matrix(params: EnsembleParams, cols: int) -> MomentMatrix:
    n = params.n
    law = build_diagonal_law(params)
    neg_rows, pos_rows, full_rows = [], [], []
    for j in range(1, n + 1):
        basis_j = law.basis(j)
        neg_row, pos_row, full_row = [], [], []
        for k in range(1, cols + 1):
            closed_neg = _closed_form_entry(params, j, k, "neg")
            closed_pos = _closed_form_entry(params, j, k, "pos")
            direct_neg = basis_j.moment_integral(k - 1, "neg")
            direct_pos = basis_j.moment_integral(k - 1, "pos")
            if closed_neg != direct_neg or closed_pos != direct_pos:
                raise InternalConsistencyError(
                    f"moment entry (j={j}, k={k}) closed form disagrees with "
                    f"the direct integral for params {params}"
                )
            if j <= k and (
                _nu_sum_entry(params, j, k, "neg") != closed_neg
                or _nu_sum_entry(params, j, k, "pos") != closed_pos
            ):
                raise InternalConsistencyError(
                    f"moment entry (j={j}, k={k}) finite-sum form disagrees "
                    f"with the hypergeometric form for params {params}"
                )
            neg_row.append(closed_neg)
            pos_row.append(closed_pos)
            full_row.append(closed_neg + closed_pos)
        neg_rows.append(tuple(neg_row))
        pos_rows.append(tuple(pos_row))
        full_rows.append(tuple(full_row))
    return MomentMatrix(
        params, cols, tuple(neg_rows), tuple(pos_rows), tuple(full_rows)
    )


def build_moment_matrix(params: EnsembleParams, extra_cols: int = 0) -> MomentMatrix:
    """Build the moment matrix with ``extra_cols`` columns beyond the square.

    Every entry is computed twice (closed form and direct exp-poly integral)
    and the two must agree exactly; a mismatch is an internal bug, never a
    user error.
    """
    if extra_cols < 0:
        raise DomainError(f"extra_cols must be nonnegative, got {extra_cols}")
    return _cached_moment_matrix(params, params.n + extra_cols)


def normalization(mm: MomentMatrix) -> Rational:
    """Normalization constant from the diagonal of the moment matrix.

    Upper triangularity reduces the determinant to the diagonal product;
    a zero diagonal entry would mean degenerate parameters and is surfaced.
    """
    total = gamma_int(mm.n + 1)  # n!
    for j in range(mm.n):
        d = mm.entries[j][j]
        if d == 0:
            raise DomainError(
                f"degenerate parameters: zero diagonal moment at j={j + 1}"
            )
        total *= d
    return 1 / total


def normalization_closed_form(n: int) -> Rational:
    """The same constant as a closed form in n alone."""
    total = mpq(1)
    for j in range(1, n + 1):
        total *= gamma_int(j + 1)
    value = 1 / total
    return -value if (n * (n - 1) // 2) % 2 else value


# -- spectral kernel -----------------------------------------------------------


@dataclass(frozen=True)
class SpectralKernel:
    """Correlation kernel S(x, y) = sum_ij coeff[i][j] x^(i-1) basis_j(y)."""

    params: EnsembleParams
    coeff: tuple[tuple[Rational, ...], ...]
    basis: tuple[PiecewiseExpPoly, ...]

    @property
    def n(self) -> int:
        return self.params.n

    def evaluate(self, x, y, prec: int | None = None) -> mpmath.mpf:
        """Kernel value at a point, in extended precision."""
        if prec is None:
            prec = DEFAULT_PRECISION
        with mp.workprec(prec):
            xf = to_bigfloat(x, prec)
            basis_vals = [b.evaluate(y, prec) for b in self.basis]
            total = mp.mpf(0)
            xpow = mp.mpf(1)
            for i in range(self.n):
                row = self.coeff[i]
                acc = mp.mpf(0)
                for j in range(self.n):
                    if row[j] != 0:
                        acc += to_bigfloat(row[j], prec) * basis_vals[j]
                total += xpow * acc
                xpow *= xf
            return +total


@lru_cache(maxsize=64)
def _cached_kernel(params: EnsembleParams) -> SpectralKernel:
    mm = _cached_moment_matrix(params, params.n)
    law = build_diagonal_law(params)
    coeff = upper_triangular_inverse(mm.square_block())
    return SpectralKernel(params, coeff, law.ftilde[: params.n])


def build_kernel(params: EnsembleParams) -> SpectralKernel:
    """Kernel coefficients from the moment matrix.

    Expanding each column-replaced determinant along the replaced column
    reduces, for an upper-triangular moment matrix, to the matrix inverse by
    back substitution, which is what is computed here.
    """
    return _cached_kernel(params)


@lru_cache(maxsize=64)
def _cached_density(params: EnsembleParams) -> PiecewiseExpPoly:
    kernel = _cached_kernel(params)
    n = params.n
    inv_n = mpq(1, n)
    result = None
    for i in range(n):
        for j in range(n):
            c = kernel.coeff[i][j]
            if c == 0:
                continue
            piece = kernel.basis[j].shift_power(i).scale(c * inv_n)
            result = piece if result is None else result.add(piece)
    assert result is not None
    return result


def density(params: EnsembleParams) -> PiecewiseExpPoly:
    """Exact spectral density as a piecewise exponential-polynomial."""
    return _cached_density(params)


def correlation(params: EnsembleParams, points, prec: int | None = None) -> mpmath.mpf:
    """r-point correlation function: determinant of the kernel matrix."""
    if prec is None:
        prec = DEFAULT_PRECISION
    pts = list(points)
    r = len(pts)
    if not 1 <= r <= params.n:
        raise DomainError(
            f"correlation order must satisfy 1 <= r <= n={params.n}, got {r}"
        )
    kernel = build_kernel(params)
    with mp.workprec(prec):
        matrix = mp.matrix(r, r)
        for a in range(r):
            for b in range(r):
                matrix[a, b] = kernel.evaluate(pts[a], pts[b], prec)
        return +mp.det(matrix)


# -- floating-point cross-check (unitary-group-integral route) ----------------


class Oracle1:
    """Independent density evaluator for cross-checking the exact path.

    Basis functions come from adaptive quadrature of the defining half-line
    integral, moments from convergent Gauss hypergeometric series, and the
    normalization from two different closed forms that must agree.  Nothing
    here touches the exact exp-poly machinery.
    """

    MAX_N = 6  # float determinant conditioning

    def __init__(self, params: EnsembleParams, prec: int | None = None):
        if params.n > self.MAX_N:
            raise DomainError(
                f"oracle supports n <= {self.MAX_N}, got n = {params.n}"
            )
        self.params = params
        self.prec = DEFAULT_PRECISION if prec is None else prec
        self._h = None
        self._check_normalization()

    # normalization, product closed form (exact rational)
    def c_exact(self) -> Rational:
        p = self.params
        n, n1, n2, a1, a2 = p.n, p.n1, p.n2, p.a1, p.a2
        denom = gamma_int(n + 1) * a1 ** (n * n1) * a2 ** (n * n2)
        for j in range(1, n + 1):
            denom *= (
                gamma_int(j) ** 2
                * gamma_int(n1 - j + 1)
                * gamma_int(n2 - j + 1)
                * binomial(n1 - 1, j - 1)
            )
        value = 1 / denom
        return -value if (n * (n - 1) // 2) % 2 else value

    def h_entry(self, j: int, k: int, side: str) -> mpmath.mpf:
        """Half-line moment of the unitary-route basis via 2F1 series."""
        p = self.params
        n, n1, n2, a1, a2 = p.n, p.n1, p.n2, p.a1, p.a2
        ratio = a1 * a2 / (a1 + a2)
        with mp.workprec(self.prec):
            if side == "neg":
                pref = (
                    ratio ** (j + k + n1 + n2 - n - 1)
                    * pochhammer(k + n1, j + n2 - n - 1)
                    * gamma_int(k)
                    * gamma_int(n1)
                )
                if k % 2 == 0:
                    pref = -pref
                series = hyp2f1_series(
                    k, j + k + n1 + n2 - n - 1, k + n1, a2 / (a1 + a2), self.prec
                )
            elif side == "pos":
                pref = (
                    ratio ** (j + k + n1 + n2 - n - 1)
                    * pochhammer(j + k + n2 - n, n1 - 1)
                    * gamma_int(k)
                    * gamma_int(j + n2 - n)
                )
                series = hyp2f1_series(
                    k, j + k + n1 + n2 - n - 1, j + k + n2 - n, a1 / (a1 + a2), self.prec
                )
            else:
                raise DomainError(f"side must be 'neg' or 'pos', got {side!r}")
            return +(to_bigfloat(pref, self.prec) * series)

    def h_matrix(self) -> mpmath.matrix:
        if self._h is None:
            n = self.params.n
            h = mp.matrix(n, n)
            with mp.workprec(self.prec):
                for j in range(1, n + 1):
                    for k in range(1, n + 1):
                        h[j - 1, k - 1] = self.h_entry(j, k, "neg") + self.h_entry(
                            j, k, "pos"
                        )
            self._h = h
        return self._h

    def _check_normalization(self):
        """Both closed forms of the normalization must agree."""
        n = self.params.n
        with mp.workprec(self.prec):
            det = mp.det(self.h_matrix())
            c_det = 1 / (to_bigfloat(gamma_int(n + 1), self.prec) * det)
            c_prod = to_bigfloat(self.c_exact(), self.prec)
            if abs(c_det - c_prod) > mp.mpf("1e-15") * abs(c_prod):
                raise InternalConsistencyError(
                    f"normalization mismatch: det route {c_det} vs product "
                    f"route {c_prod} for params {self.params}"
                )

    def f(self, j: int, lam) -> mpmath.mpf:
        """Basis function by adaptive quadrature of the defining integral."""
        p = self.params
        n, n1, n2, a1, a2 = p.n, p.n1, p.n2, p.a1, p.a2
        with mp.workprec(self.prec):
            lamf = to_bigfloat(lam, self.prec)
            a1f = to_bigfloat(a1, self.prec)
            a2f = to_bigfloat(a2, self.prec)
            rate = 1 + a2f / a1f
            expo = n2 - n + j - 1

            def integrand(w):
                return w ** expo * mp.exp(-rate * w) * (lamf + a2f * w) ** (n1 - 1)

            lower = max(mp.mpf(0), -lamf / a2f)
            integral = mpmath.quad(integrand, [lower, mp.inf])
            return +(
                a2f ** (j + n2 - n) * mp.exp(-lamf / a1f) * integral
            )

    def density(self, lam) -> mpmath.mpf:
        """Spectral density via the column-replaced determinant sum."""
        n = self.params.n
        with mp.workprec(self.prec):
            h = self.h_matrix()
            fvec = [self.f(j, lam) for j in range(1, n + 1)]
            lamf = to_bigfloat(lam, self.prec)
            total = mp.mpf(0)
            for i in range(n):
                m = mp.matrix(h)
                for j in range(n):
                    m[j, i] = fvec[j]
                total += lamf ** i * mp.det(m)
            c = to_bigfloat(self.c_exact(), self.prec)
            # n! C / n = (n-1)! C
            return +(to_bigfloat(gamma_int(n), self.prec) * c * total)


def oracle1_density(params: EnsembleParams, lam, prec: int | None = None) -> mpmath.mpf:
    """One-shot oracle evaluation (builds and caches nothing)."""
    return Oracle1(params, prec).density(lam)
