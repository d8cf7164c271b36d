"""Difference of two random density matrices.

For small dimensions the spectral density of the difference has closed
polynomial forms on [-1, 1]; the ten known cases are embedded here as exact
fixtures, together with their absolute means, which quantify the average
distinguishability of the two states.  Larger dimensions are served by the
Monte Carlo sampler and, in the large-dimension limit, by the asymptotic
model with both weights set to 1/n.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from gmpy2 import mpq

from .asymptotic import AsymptoticModel, make_model
from .errors import DomainError, InternalConsistencyError, UnsupportedParametersError
from .specfun import Rational, as_rational

# -- exact polynomial helpers (dense coefficient lists, degree order) ----------


def _poly_mul(a, b):
    out = [mpq(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _poly_scale(a, c):
    return [ai * c for ai in a]


def _binomial_power(sign: int, k: int):
    """(1 + sign*x)^k as a coefficient list."""
    poly = [mpq(1)]
    for _ in range(k):
        poly = _poly_mul(poly, [mpq(1), mpq(sign)])
    return poly


def _poly_eval(a, x: Rational) -> Rational:
    total = mpq(0)
    for ai in reversed(a):
        total = total * x + ai
    return total


def _reflect(a):
    """Coefficients of p(-x)."""
    return [(-ai if i % 2 else ai) for i, ai in enumerate(a)]


def _integrate_unit(a, lo: int, hi: int) -> Rational:
    """Exact integral of the polynomial over [lo, hi] in {-1, 0, 1}."""
    total = mpq(0)
    for i, ai in enumerate(a):
        total += ai * (mpq(hi) ** (i + 1) - mpq(lo) ** (i + 1)) / (i + 1)
    return total


@dataclass(frozen=True)
class HelstromFixture:
    """Closed-form spectral density of one (n, n1, n2) combination.

    ``neg_poly`` is valid on [-1, 0] and ``pos_poly`` on [0, 1]; outside
    [-1, 1] the density vanishes.  ``abs_mean`` is the tabulated average of
    the absolute eigenvalue.
    """

    n: int
    n1: int
    n2: int
    neg_poly: tuple[Rational, ...]
    pos_poly: tuple[Rational, ...]
    abs_mean: Rational

    def density(self, x) -> Rational:
        x = as_rational(x)
        if x < -1 or x > 1:
            return mpq(0)
        poly = self.neg_poly if x < 0 else self.pos_poly
        return _poly_eval(poly, x)

    def mass(self) -> Rational:
        return _integrate_unit(self.neg_poly, -1, 0) + _integrate_unit(
            self.pos_poly, 0, 1
        )

    def computed_abs_mean(self) -> Rational:
        neg = _integrate_unit([mpq(0)] + list(self.neg_poly), -1, 0)
        pos = _integrate_unit([mpq(0)] + list(self.pos_poly), 0, 1)
        return pos - neg

    def positive_fraction(self) -> Rational:
        return _integrate_unit(self.pos_poly, 0, 1)


# prefactor, power of x, (sign, power) of the (1 +/- x) factor, tail, abs mean
_TABLE_ROWS = [
    ((2, 2, 2), mpq(6), 2, (1, 2), [2, -1], None, mpq(18, 35)),
    ((2, 2, 3), mpq(12), 2, (1, 3), [1, -3, 1], None, mpq(10, 21)),
    ((2, 2, 4), mpq(6), 2, (1, 4), [2, -8, 20, -5], None, mpq(5, 11)),
    ((2, 3, 3), mpq(30, 7), 2, (1, 4), [4, -16, 12, -3], None, mpq(100, 231)),
    ((2, 3, 4), mpq(20), 2, (1, 5), [1, -5, 9, -5, 1], None, mpq(175, 429)),
    (
        (2, 4, 4),
        mpq(140, 33),
        2,
        (1, 6),
        [6, -36, 82, -72, 30, -5],
        None,
        mpq(490, 1287),
    ),
    (
        (3, 3, 3),
        mpq(8, 143),
        0,
        (1, 6),
        [24, -144, -1064, 2058, 9772, -18158, 18088, -11753, 4494, -749],
        None,
        mpq(1184, 3315),
    ),
    (
        (3, 3, 4),
        mpq(2, 663),
        0,
        (1, 8),
        [440, -4675, 3507, 182244, -113388, -1883250, 2377170, -1645656,
         727788, -193351, 23495],
        # explicit positive side: this row is not a reflection of the left one
        (
            mpq(2, 663),
            0,
            (-1, 7),
            [440, 1925, -17338, -42351, 164496, 519078, 826140, 925386,
             773052, 458963, 159074, 23495],
        ),
        mpq(979, 2907),
    ),
    (
        (3, 4, 4),
        mpq(220, 88179),
        0,
        (1, 9),
        [572, -5148, -6831, 198759, -76527, -2406294, 4903878, -5613012,
         4481748, -2583459, 1026651, -249615, 27735],
        None,
        mpq(48950, 156009),
    ),
    (
        (4, 4, 4),
        mpq(2, 646323),
        0,
        (1, 12),
        [251940, -3023280, 79319110, -807719640, -3849356784, 12770088968,
         23325866928, -70508450649, 97987112860, -97689979023, 77811833736,
         -51349726064, 28242904872, -12756361800, 4561977896, -1207136637,
         208188708, -17349059],
        None,
        mpq(1495, 5394),
    ),
]


def _build_branch(prefactor, x_power, binom, tail):
    sign, k = binom
    poly = _poly_mul(_binomial_power(sign, k), [as_rational(t) for t in tail])
    poly = _poly_mul(poly, [mpq(0)] * x_power + [mpq(1)])
    return tuple(_poly_scale(poly, prefactor))


@lru_cache(maxsize=1)
def fixture_table() -> tuple[HelstromFixture, ...]:
    """The ten embedded closed-form fixtures, integrity-checked on build."""
    fixtures = []
    for key, pref, xp, binom, tail, pos_spec, abs_mean in _TABLE_ROWS:
        neg = _build_branch(pref, xp, binom, tail)
        if pos_spec is None:
            pos = tuple(_reflect(neg))
        else:
            pos = _build_branch(*pos_spec)
        fx = HelstromFixture(key[0], key[1], key[2], neg, pos, abs_mean)
        if fx.mass() != 1:
            raise InternalConsistencyError(
                f"fixture {key} density does not integrate to 1 (got {fx.mass()})"
            )
        if fx.computed_abs_mean() != abs_mean:
            raise InternalConsistencyError(
                f"fixture {key} absolute mean mismatch: integral gives "
                f"{fx.computed_abs_mean()}, table says {abs_mean}"
            )
        fixtures.append(fx)
    return tuple(fixtures)


def fixture_abs_mean(fixture: HelstromFixture) -> Rational:
    """Absolute mean by exact integration; must match the embedded value."""
    value = fixture.computed_abs_mean()
    if value != fixture.abs_mean:
        raise InternalConsistencyError(
            f"fixture ({fixture.n},{fixture.n1},{fixture.n2}) integrity "
            f"failure: {value} != {fixture.abs_mean}"
        )
    return value


def lookup_fixture(n: int, n1: int, n2: int) -> tuple[HelstromFixture, bool]:
    """Find the fixture for (n, n1, n2); second value marks a swap.

    The table stores n1 <= n2; the swapped case is served by reflecting the
    spectrum (x -> -x).
    """
    lo, hi = min(n1, n2), max(n1, n2)
    for fx in fixture_table():
        if (fx.n, fx.n1, fx.n2) == (n, lo, hi):
            return fx, n1 > n2
    raise UnsupportedParametersError(
        f"no closed-form fixture for (n, n1, n2) = ({n}, {n1}, {n2}); "
        "use the Monte Carlo or asymptotic backend"
    )


def fixture_density(n: int, n1: int, n2: int, x) -> Rational:
    """Exact density value at rational x for a tabulated combination."""
    x = as_rational(x)
    fx, swapped = lookup_fixture(n, n1, n2)
    return fx.density(-x if swapped else x)


def positivity_fraction_sigma(n: int, n1: int, n2: int) -> Rational:
    """Probability that a generic eigenvalue of the difference is positive."""
    fx, swapped = lookup_fixture(n, n1, n2)
    if swapped:
        return 1 - fx.positive_fraction()
    return fx.positive_fraction()


def helstrom_asymptotic(n: int, n1: int, n2: int) -> AsymptoticModel:
    """Large-dimension model for the density-matrix difference.

    Both averaged traces are 1, so the scaled weights are 1/n; accuracy
    improves with n and a warning is emitted when n is small.
    """
    if n < 1 or n1 < n or n2 < n:
        raise DomainError(f"need 1 <= n <= n1, n2; got n={n}, n1={n1}, n2={n2}")
    if n < 10:
        warnings.warn(
            f"asymptotic density requested at small n={n}; treat as a rough guide",
            RuntimeWarning,
        )
    return make_model(mpq(n, n1), mpq(n, n2), mpq(1, n), mpq(1, n))


def fixture_cdf_callable(fixture: HelstromFixture, swapped: bool = False):
    """Vectorized float CDF of a fixture for goodness-of-fit tests."""
    neg = fixture.neg_poly if not swapped else tuple(_reflect(fixture.pos_poly))
    pos = fixture.pos_poly if not swapped else tuple(_reflect(fixture.neg_poly))
    # antiderivatives with integration constants fixed at x = -1 and x = 0
    neg_anti = np.array([0.0] + [float(c) / (i + 1) for i, c in enumerate(neg)])
    pos_anti = np.array([0.0] + [float(c) / (i + 1) for i, c in enumerate(pos)])
    neg_at_m1 = np.polyval(neg_anti[::-1], -1.0)
    neg_at_0 = np.polyval(neg_anti[::-1], 0.0)
    neg_mass = neg_at_0 - neg_at_m1

    def cdf(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        mid = (x >= -1) & (x < 0)
        top = x >= 0
        out[mid] = np.polyval(neg_anti[::-1], x[mid]) - neg_at_m1
        xs = np.clip(x[top], 0.0, 1.0)
        out[top] = neg_mass + np.polyval(pos_anti[::-1], xs)
        return out

    return cdf
