"""Large-dimension asymptotic spectral density.

The Stieltjes transform of the limiting density of a weighted difference of
two scaled Wishart matrices satisfies a cubic whose coefficients are linear
in the spectral variable.  The density follows from the Cardano real-branch
combination, and the support edges are the outer real roots of the quartic
left after dividing the discriminant by its guaranteed z^2 factor.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np
from gmpy2 import mpq
from mpmath import mp

from .errors import DomainError, InternalConsistencyError, NumericError
from .specfun import Rational, as_rational, to_bigfloat

_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class AsymptoticModel:
    """Limit model: dimension ratios, weights, and the support interval."""

    c1: Rational
    c2: Rational
    alpha1: Rational
    alpha2: Rational
    support: tuple[float, float]

    @property
    def lam_minus(self) -> float:
        return self.support[0]

    @property
    def lam_plus(self) -> float:
        return self.support[1]


def make_model(c1, c2, alpha1, alpha2) -> AsymptoticModel:
    """Build a model from ratios c_j in (0, 1] and positive weights."""
    c1, c2 = as_rational(c1), as_rational(c2)
    alpha1, alpha2 = as_rational(alpha1), as_rational(alpha2)
    for c in (c1, c2):
        if not 0 < c <= 1:
            raise DomainError(f"dimension ratio must lie in (0, 1], got {c}")
    if alpha1 <= 0 or alpha2 <= 0:
        raise DomainError("weights must be positive")
    edges = _support_edges(c1, c2, alpha1, alpha2)
    return AsymptoticModel(c1, c2, alpha1, alpha2, edges)


def from_unscaled(n: int, n1: int, n2: int, a1, a2) -> AsymptoticModel:
    """Model for the unscaled difference: c_j = n/n_j, alpha_j = n_j a_j."""
    if n < 1 or n1 < n or n2 < n:
        raise DomainError(
            f"need 1 <= n <= n1, n2; got n={n}, n1={n1}, n2={n2}"
        )
    a1, a2 = as_rational(a1), as_rational(a2)
    if a1 <= 0 or a2 <= 0:
        raise DomainError("weights must be positive")
    return make_model(mpq(n, n1), mpq(n, n2), n1 * a1, n2 * a2)


def cubic_coeffs(model: AsymptoticModel, z):
    """Coefficients (g0, g1, g2, g3) of the cubic satisfied by the transform.

    Works in whatever arithmetic ``z`` carries: exact rationals stay exact,
    floats and complex values stay floating.
    """
    exact = isinstance(z, (int, mpq))
    conv = as_rational if exact else float
    c1, c2 = conv(model.c1), conv(model.c2)
    a1, a2 = conv(model.alpha1), conv(model.alpha2)
    if exact:
        z = as_rational(z)
    g3 = c1 * c2 * a1 * a2 * z
    g2 = (c2 * a2 - c1 * a1) * z + (c1 * c2 - c1 - c2) * a1 * a2
    g1 = -z + (1 - c1) * a1 - (1 - c2) * a2
    g0 = -z * 0 - 1
    return g0, g1, g2, g3


# -- support -------------------------------------------------------------------


def _poly_mul(a, b):
    out = [mpq(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def _poly_add(a, b):
    out = [mpq(0)] * max(len(a), len(b))
    for i, ai in enumerate(a):
        out[i] += ai
    for i, bi in enumerate(b):
        out[i] += bi
    return out


def _poly_scale(a, c):
    return [ai * c for ai in a]


def _poly_eval(a, x):
    total = mpq(0) if isinstance(x, mpq) else 0.0
    for ai in reversed(a):
        total = total * x + (ai if isinstance(x, mpq) else float(ai))
    return total


def _discriminant_quartic(c1, c2, a1, a2):
    """Quartic (eta^2 - 4 zeta^3) / z^2 with exact rational coefficients."""
    g3 = [mpq(0), c1 * c2 * a1 * a2]
    g2 = [(c1 * c2 - c1 - c2) * a1 * a2, c2 * a2 - c1 * a1]
    g1 = [(1 - c1) * a1 - (1 - c2) * a2, mpq(-1)]
    g0 = [mpq(-1)]
    zeta = _poly_add(_poly_mul(g2, g2), _poly_scale(_poly_mul(g1, g3), -3))
    eta = _poly_add(
        _poly_add(
            _poly_scale(_poly_mul(g2, _poly_mul(g2, g2)), 2),
            _poly_scale(_poly_mul(g1, _poly_mul(g2, g3)), -9),
        ),
        _poly_scale(_poly_mul(g0, _poly_mul(g3, g3)), 27),
    )
    disc = _poly_add(
        _poly_mul(eta, eta), _poly_scale(_poly_mul(zeta, _poly_mul(zeta, zeta)), -4)
    )
    disc = disc + [mpq(0)] * (7 - len(disc))
    if disc[0] != 0 or disc[1] != 0:
        raise InternalConsistencyError(
            "discriminant polynomial is not divisible by z^2; "
            f"low coefficients {disc[0]}, {disc[1]}"
        )
    return disc[2:7]


def _bisect_root(poly, lo: mpq, hi: mpq, steps: int = 60) -> float:
    flo = _poly_eval(poly, lo)
    for _ in range(steps):
        mid = (lo + hi) / 2
        fmid = _poly_eval(poly, mid)
        if fmid == 0:
            return float(mid)
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return float((lo + hi) / 2)


def _polish(poly, root: float, spread: float) -> float:
    """Bracket a numeric root with an exact sign change, then bisect."""
    delta = max(1e-12, 1e-9 * abs(root), 1e-12 * spread)
    for _ in range(60):
        lo = mpq(root - delta)
        hi = mpq(root + delta)
        flo = _poly_eval(poly, lo)
        fhi = _poly_eval(poly, hi)
        if flo == 0:
            return float(lo)
        if fhi == 0:
            return float(hi)
        if (flo > 0) != (fhi > 0):
            return _bisect_root(poly, lo, hi)
        delta *= 4
    raise NumericError(f"could not bracket the support edge near {root}")


def _support_edges(c1, c2, a1, a2) -> tuple[float, float]:
    quartic = _discriminant_quartic(c1, c2, a1, a2)
    coeffs = [float(c) for c in reversed(quartic)]
    if abs(coeffs[0]) == 0:
        raise DomainError("degenerate model: quartic leading coefficient vanishes")
    roots = np.roots(coeffs)
    scale = 1 + np.abs(roots)
    real = sorted(r.real for r in roots if abs(r.imag) <= 1e-9 * (1 + abs(r)))
    if len(real) < 2:
        raise DomainError(
            f"degenerate model: expected two real support edges, found {len(real)}"
        )
    if len(real) > 2:
        warnings.warn(
            "support quartic has more than two real roots; returning the "
            "outermost pair (possible multi-interval support)",
            RuntimeWarning,
        )
    spread = real[-1] - real[0]
    lam_minus = _polish(quartic, real[0], spread)
    lam_plus = _polish(quartic, real[-1], spread)
    return lam_minus, lam_plus


def support(model: AsymptoticModel) -> tuple[float, float]:
    """Recompute the support edges from the quartic (also cached on the model)."""
    return _support_edges(model.c1, model.c2, model.alpha1, model.alpha2)


# -- Stieltjes transform -------------------------------------------------------


def _cubic_roots(model: AsymptoticModel, z: complex) -> np.ndarray:
    g0, g1, g2, g3 = cubic_coeffs(model, complex(z))
    return np.roots([g3, g2, g1, g0])


def stieltjes(model: AsymptoticModel, z: complex) -> complex:
    """The Herglotz root of the cubic at a point in the upper half plane.

    The branch is tracked by continuation from a large imaginary height,
    where the transform behaves like -1/z; the returned root must keep a
    positive imaginary part and a small cubic residual.
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError(f"stieltjes transform needs Im z > 0, got {z}")
    span = abs(model.lam_plus) + abs(model.lam_minus) + 1.0
    y_top = max(10.0 * span, 10.0 * abs(z))
    steps = 40
    current = complex(z.real, y_top)
    s = -1.0 / current
    ratio = (z.imag / y_top) ** (1.0 / steps)
    for k in range(1, steps + 1):
        current = complex(z.real, y_top * ratio**k)
        roots = _cubic_roots(model, current)
        s = roots[np.argmin(np.abs(roots - s))]
    if s.imag <= 0:
        raise NumericError(
            f"branch selection failed at z={z}: no root with positive "
            f"imaginary part (got {s})"
        )
    g0, g1, g2, g3 = cubic_coeffs(model, z)
    residual = abs(((g3 * s + g2) * s + g1) * s + g0)
    if residual > 1e-10 * max(1.0, abs(z) ** 3):
        raise NumericError(f"cubic residual {residual} too large at z={z}")
    return complex(s)


# -- density -------------------------------------------------------------------


def _real_cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _density_inside_mp(model: AsymptoticModel, lam: float, prec: int = 150) -> float:
    """Same Cardano combination evaluated entirely in extended precision."""
    with mp.workprec(prec):
        z = mp.mpf(lam)
        c1, c2 = to_bigfloat(model.c1, prec), to_bigfloat(model.c2, prec)
        a1, a2 = to_bigfloat(model.alpha1, prec), to_bigfloat(model.alpha2, prec)
        g3 = c1 * c2 * a1 * a2 * z
        g2 = (c2 * a2 - c1 * a1) * z + (c1 * c2 - c1 - c2) * a1 * a2
        g1 = -z + (1 - c1) * a1 - (1 - c2) * a2
        g0 = mp.mpf(-1)
        zeta = g2 * g2 - 3 * g1 * g3
        eta = 2 * g2**3 - 9 * g1 * g2 * g3 + 27 * g0 * g3 * g3
        disc = eta * eta - 4 * zeta**3
        if disc < 0:
            disc = mp.mpf(0)
        u = (eta + mp.sqrt(disc)) / 2
        big_g = mp.cbrt(u) if u >= 0 else -mp.cbrt(-u)
        if big_g == 0:
            raise NumericError(f"vanishing Cardano combination at lambda={lam}")
        sign = 1 if lam > 0 else -1
        value = sign / (2 * mp.sqrt(3) * mp.pi * g3) * (big_g - zeta / big_g)
        return float(value)


def _density_inside(model: AsymptoticModel, lam: float) -> float:
    g0, g1, g2, g3 = cubic_coeffs(model, lam)
    zeta = g2 * g2 - 3.0 * g1 * g3
    eta = 2.0 * g2**3 - 9.0 * g1 * g2 * g3 + 27.0 * g0 * g3 * g3
    disc = eta * eta - 4.0 * zeta**3
    if disc < 0:
        # inside the support this is a rounding artifact near the edges
        disc = 0.0
    big_g = _real_cbrt((eta + math.sqrt(disc)) / 2.0)
    if abs(big_g) < 1e-300:
        raise NumericError(f"vanishing Cardano combination at lambda={lam}")
    diff = big_g - zeta / big_g
    if abs(diff) < 1e-6 * abs(big_g):
        # near-edge cancellation: recompute in extended precision
        return _density_inside_mp(model, lam)
    sign = 1.0 if lam > 0 else -1.0
    return sign / (2.0 * _SQRT3 * math.pi * g3) * diff


def density_asymptotic(model: AsymptoticModel, lam: float) -> float:
    """Limiting spectral density at a real point; zero outside the support.

    At lambda = 0 the closed form is 0/0 (the leading cubic coefficient is
    proportional to lambda) while the density itself is finite, so the value
    is taken as the symmetric average of two one-sided evaluations.
    """
    lam = float(lam)
    lo, hi = model.support
    if lam < lo or lam > hi:
        return 0.0
    eps = 1e-9 * (hi - lo)
    if abs(lam) < eps:
        left = _density_inside(model, -eps) if -eps >= lo else 0.0
        right = _density_inside(model, eps) if eps <= hi else 0.0
        return 0.5 * (left + right)
    return _density_inside(model, lam)


def density_grid(model: AsymptoticModel, xs) -> np.ndarray:
    """Vectorized convenience wrapper for CLI and plotting work."""
    return np.array([density_asymptotic(model, x) for x in np.asarray(xs, float)])


def _quad_points(model: AsymptoticModel) -> list[float]:
    # split at zero only when the support crosses it (the density has a
    # removable 0/0 there); edges are always endpoints
    lo, hi = model.support
    return [lo, 0.0, hi] if lo < 0.0 < hi else [lo, hi]


def mass(model: AsymptoticModel, prec: int = 53) -> float:
    """Adaptive quadrature of the density over its support (should be 1)."""
    with mp.workprec(max(prec, 53)):
        value = mp.quad(
            lambda x: density_asymptotic(model, float(x)), _quad_points(model)
        )
    return float(value)


def mean(model: AsymptoticModel) -> float:
    """First moment of the asymptotic density by quadrature."""
    with mp.workprec(53):
        value = mp.quad(
            lambda x: float(x) * density_asymptotic(model, float(x)),
            _quad_points(model),
        )
    return float(value)


def cdf_callable(model: AsymptoticModel, points: int = 2001):
    """Vectorized numeric CDF built from a cumulative trapezoid grid."""
    lo, hi = model.support
    xs = np.linspace(lo, hi, points)
    ys = density_grid(model, xs)
    cum = np.concatenate([[0.0], np.cumsum((ys[1:] + ys[:-1]) / 2.0 * np.diff(xs))])
    if cum[-1] > 0:
        cum = cum / cum[-1]

    def cdf(x):
        return np.interp(np.asarray(x, dtype=float), xs, cum, left=0.0, right=1.0)

    return cdf
