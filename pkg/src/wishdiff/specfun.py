"""Exact rational arithmetic and terminating special functions.

Everything downstream of this module is either an exact rational computation
(backed by ``gmpy2.mpq``) or an extended-precision float (``mpmath``) with the
working precision passed explicitly.  The gamma function exists only for
positive integer arguments; every closed form in this package needs nothing
more, which is what keeps the whole finite-dimension pipeline exact.
"""

from __future__ import annotations

import re
from fractions import Fraction

import gmpy2
import mpmath
from gmpy2 import mpq, mpz
from mpmath import mp

from .errors import DomainError, NumericError

#: Exact rational number type used throughout the package.
Rational = mpq

#: Default precision (bits) for extended-precision floating point work.
DEFAULT_PRECISION = 100

_RATIONAL_RE = re.compile(r"^[+-]?\d+(?:\s*/\s*\d+)?$")

RationalLike = "Rational | int | str | Fraction"


def rational(num, den=1) -> Rational:
    """Build an exact rational, reduced and with positive denominator."""
    if den == 0:
        raise DomainError("zero denominator")
    return mpq(num, den)


def as_rational(value) -> Rational:
    """Coerce an int, string, Fraction, or Rational to Rational.

    Floats are rejected: silent binary-to-rational conversion would defeat the
    exactness contract, so callers must be explicit.
    """
    if isinstance(value, mpq):
        return value
    if isinstance(value, (int, mpz)):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        return parse_rational(value)
    raise DomainError(f"cannot interpret {value!r} as an exact rational")


def parse_rational(text: str) -> Rational:
    """Parse ``"p/q"`` or ``"p"``.  Decimal notation is rejected."""
    stripped = text.strip()
    if not _RATIONAL_RE.match(stripped):
        raise DomainError(
            f"not an exact rational: {text!r} (write p/q or an integer; "
            "decimals are rejected to preserve exactness)"
        )
    try:
        return mpq(stripped.replace(" ", ""))
    except ZeroDivisionError:
        raise DomainError(f"zero denominator in {text!r}") from None


def format_rational(value) -> str:
    """Render a rational as ``"p/q"``, or ``"p"`` when the denominator is 1."""
    value = as_rational(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def to_bigfloat(value, prec: int | None = None) -> mpmath.mpf:
    """Correctly rounded conversion to an mpmath float at ``prec`` bits."""
    if prec is None:
        prec = DEFAULT_PRECISION
    with mp.workprec(prec):
        if isinstance(value, (mpq, Fraction)):
            return mp.mpf(int(value.numerator)) / mp.mpf(int(value.denominator))
        return mp.mpf(value)


def gamma_int(m: int) -> Rational:
    """Gamma at a positive integer: ``gamma_int(m) == (m-1)!``."""
    if m < 1:
        raise DomainError(f"gamma_int requires a positive integer, got {m}")
    return mpq(gmpy2.fac(m - 1))


def binomial(a: int, b: int) -> Rational:
    """Generalized binomial coefficient for integer arguments.

    Follows the limit convention of the gamma-quotient definition: zero for
    b < 0 and for 0 <= a < b, and the falling-factorial value when a < 0.
    The b > a >= 0 zeros are what make the moment matrix upper triangular.
    """
    if b < 0:
        return mpq(0)
    return mpq(gmpy2.bincoef(a, b))


def pochhammer(a: int, b: int) -> Rational:
    """Rising factorial ``(a)_b = a (a+1) ... (a+b-1)`` for integer a, b >= 0."""
    if b < 0:
        raise DomainError(f"pochhammer needs a nonnegative length, got {b}")
    result = mpz(1)
    for i in range(b):
        result *= a + i
    return mpq(result)


def laguerre_coeffs(k: int, a: int) -> tuple[Rational, ...]:
    """Coefficient list (degree order) of the associated Laguerre polynomial.

    Coefficient of x^i is (-1)^i C(k+a, k-i) / i!; negative integer
    superscripts a are allowed, which the derivative chain of the weight
    function relies on.
    """
    if k < 0:
        raise DomainError(f"laguerre degree must be nonnegative, got {k}")
    coeffs = []
    for i in range(k + 1):
        c = binomial(k + a, k - i) / gamma_int(i + 1)
        coeffs.append(-c if i % 2 else c)
    return tuple(coeffs)


def laguerre(k: int, a: int, x) -> Rational:
    """Associated Laguerre polynomial L_k^(a)(x) at an exact rational x."""
    x = as_rational(x)
    total = mpq(0)
    for coeff in reversed(laguerre_coeffs(k, a)):
        total = total * x + coeff
    return total


def hyp2f1_terminating(a: int, b: int, c: int, z) -> Rational:
    """Terminating Gauss hypergeometric sum 2F1(a, b; c; z) at rational z.

    The first parameter must be a nonpositive integer so the series is a
    finite sum; the sum stops at the first vanishing numerator factor. If the
    denominator parameter c hits a pole before that, the value is undefined
    and a DomainError is raised.
    """
    if a > 0:
        raise DomainError(f"first parameter must be a nonpositive integer, got {a}")
    z = as_rational(z)
    total = mpq(1)
    term = mpq(1)
    i = 0
    while a + i != 0 and b + i != 0:
        if c + i == 0:
            raise DomainError(
                f"2F1({a},{b};{c};z) hits the pole of the denominator "
                f"parameter at series index {i}"
            )
        term = term * (a + i) * (b + i) * z / ((c + i) * (i + 1))
        total += term
        i += 1
    return total


def hyp1f1_terminating(a: int, c: int, z) -> Rational:
    """Terminating Kummer sum 1F1(a; c; z) for nonpositive integer a."""
    if a > 0:
        raise DomainError(f"first parameter must be a nonpositive integer, got {a}")
    z = as_rational(z)
    total = mpq(1)
    term = mpq(1)
    i = 0
    while a + i != 0:
        if c + i == 0:
            raise DomainError(
                f"1F1({a};{c};z) hits the pole of the denominator parameter "
                f"at series index {i}"
            )
        term = term * (a + i) * z / ((c + i) * (i + 1))
        total += term
        i += 1
    return total


_MAX_SERIES_TERMS = 10**6


def hyp2f1_series(a: int, b: int, c: int, z, prec: int | None = None) -> mpmath.mpf:
    """Convergent 2F1 series for positive integer parameters and |z| < 1.

    Terms are accumulated at ``prec`` bits until the relative term size drops
    below 2^-prec.  Only the floating-point cross-check path uses this.
    """
    if prec is None:
        prec = DEFAULT_PRECISION
    if min(a, b, c) <= 0:
        raise DomainError("series form expects positive integer parameters")
    with mp.workprec(prec + 10):
        zf = to_bigfloat(z, prec + 10) if not isinstance(z, mpmath.mpf) else z
        if abs(zf) >= 1:
            raise DomainError(f"series form needs |z| < 1, got z = {zf}")
        eps = mp.mpf(2) ** (-prec)
        total = mp.mpf(1)
        term = mp.mpf(1)
        i = 0
        while True:
            term = term * (a + i) * (b + i) * zf / ((c + i) * (i + 1))
            total += term
            i += 1
            if abs(term) < eps * abs(total):
                return +total
            if i > _MAX_SERIES_TERMS:
                raise NumericError(
                    f"2F1 series did not converge within {_MAX_SERIES_TERMS} terms"
                )
