"""Exact algebra of piecewise exponential-polynomials.

A function is stored as a finite sum of ``c * x^p * exp(r x)`` terms on each
half line, plus an exact rational value at zero.  Rates on the negative side
must be positive and rates on the positive side negative, so every moment
integral over the half lines converges and evaluates to an exact rational.
The diagonal-element law, its derivatives, and the spectral density all live
in this representation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import mpmath
import numpy as np
from gmpy2 import mpq
from mpmath import mp

from .errors import DomainError
from .specfun import (
    DEFAULT_PRECISION,
    Rational,
    as_rational,
    format_rational,
    gamma_int,
    parse_rational,
    to_bigfloat,
)


@dataclass(frozen=True)
class ExpPolyTerm:
    """One ``coeff * x^power * exp(rate * x)`` term."""

    coeff: Rational
    power: int
    rate: Rational


def merge_terms(terms) -> tuple[ExpPolyTerm, ...]:
    """Canonicalize a term list: merge equal (power, rate) keys, drop zeros."""
    acc: dict[tuple[int, Rational], Rational] = {}
    for t in terms:
        key = (t.power, t.rate)
        acc[key] = acc.get(key, mpq(0)) + t.coeff
    merged = [
        ExpPolyTerm(c, p, r) for (p, r), c in acc.items() if c != 0
    ]
    merged.sort(key=lambda t: (t.power, t.rate))
    return tuple(merged)


def multiply(terms_a, terms_b) -> tuple[ExpPolyTerm, ...]:
    """Exact product of two single-side term lists: rates add, powers add."""
    out = []
    for a in terms_a:
        for b in terms_b:
            out.append(ExpPolyTerm(a.coeff * b.coeff, a.power + b.power, a.rate + b.rate))
    return merge_terms(out)


def _term(coeff, power: int, rate) -> ExpPolyTerm:
    return ExpPolyTerm(as_rational(coeff), int(power), as_rational(rate))


@dataclass(frozen=True)
class PiecewiseExpPoly:
    """Piecewise exp-poly with independent halves and an exact value at 0."""

    neg_side: tuple[ExpPolyTerm, ...]
    pos_side: tuple[ExpPolyTerm, ...]
    at_zero: Rational = field(default_factory=lambda: mpq(0))

    def __post_init__(self):
        neg = merge_terms(self.neg_side)
        pos = merge_terms(self.pos_side)
        for t in neg:
            if t.rate <= 0:
                raise DomainError(
                    f"negative-side rate must be positive for integrability, got {t.rate}"
                )
        for t in pos:
            if t.rate >= 0:
                raise DomainError(
                    f"positive-side rate must be negative for integrability, got {t.rate}"
                )
        object.__setattr__(self, "neg_side", neg)
        object.__setattr__(self, "pos_side", pos)
        object.__setattr__(self, "at_zero", as_rational(self.at_zero))

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, x, prec: int | None = None) -> mpmath.mpf:
        """Evaluate at x with extended precision; x = 0 returns at_zero."""
        if prec is None:
            prec = DEFAULT_PRECISION
        with mp.workprec(prec):
            xf = to_bigfloat(x, prec)
            if xf == 0:
                return to_bigfloat(self.at_zero, prec)
            side = self.neg_side if xf < 0 else self.pos_side
            total = mp.mpf(0)
            for t in side:
                total += to_bigfloat(t.coeff, prec) * xf ** t.power * mp.exp(
                    to_bigfloat(t.rate, prec) * xf
                )
            return +total

    def limit_at_zero(self, side: str) -> Rational:
        """Exact one-sided limit at 0 (the sum of power-0 coefficients)."""
        terms = {"neg": self.neg_side, "pos": self.pos_side}[side]
        return sum((t.coeff for t in terms if t.power == 0), mpq(0))

    # -- calculus -----------------------------------------------------------

    def derivative(self) -> "PiecewiseExpPoly":
        """Term-wise exact derivative of both sides.

        The stored value at 0 is the limit of the negative-side derivative;
        callers are responsible for having checked that the one-sided limits
        agree (see diagonal_law.check_smoothness).
        """
        def diff(terms):
            out = []
            for t in terms:
                if t.power > 0:
                    out.append(ExpPolyTerm(t.coeff * t.power, t.power - 1, t.rate))
                out.append(ExpPolyTerm(t.coeff * t.rate, t.power, t.rate))
            return merge_terms(out)

        neg = diff(self.neg_side)
        at_zero = sum((t.coeff for t in neg if t.power == 0), mpq(0))
        return PiecewiseExpPoly(neg, diff(self.pos_side), at_zero)

    def moment_integral(self, k: int, side: str = "both") -> Rational:
        """Exact integral of x^k times this function over a half line or both.

        Uses the closed forms of the half-line gamma integrals; the value at
        zero carries no measure and is ignored.
        """
        if k < 0:
            raise DomainError(f"moment order must be nonnegative, got {k}")
        if side not in ("neg", "pos", "both"):
            raise DomainError(f"side must be 'neg', 'pos' or 'both', got {side!r}")
        total = mpq(0)
        if side in ("neg", "both"):
            for t in self.neg_side:
                m = k + t.power
                value = gamma_int(m + 1) / t.rate ** (m + 1)
                total += t.coeff * (-value if m % 2 else value)
        if side in ("pos", "both"):
            for t in self.pos_side:
                m = k + t.power
                total += t.coeff * gamma_int(m + 1) / (-t.rate) ** (m + 1)
        return total

    def integral_up_to(self, x, prec: int | None = None) -> mpmath.mpf:
        """Integral over (-inf, x], exact antiderivative coefficients.

        For a normalized density this is the cumulative distribution function.
        """
        if prec is None:
            prec = DEFAULT_PRECISION
        with mp.workprec(prec):
            xf = to_bigfloat(x, prec)
            if xf <= 0:
                total = mp.mpf(0)
                for t in self.neg_side:
                    total += _antiderivative_at(t, xf, prec)
                return +total
            total = to_bigfloat(self.moment_integral(0, "neg"), prec)
            for t in self.pos_side:
                total += _antiderivative_at(t, xf, prec) - to_bigfloat(
                    _antiderivative_at_zero(t), prec
                )
            return +total

    # -- algebra ------------------------------------------------------------

    def add(self, other: "PiecewiseExpPoly") -> "PiecewiseExpPoly":
        return PiecewiseExpPoly(
            self.neg_side + other.neg_side,
            self.pos_side + other.pos_side,
            self.at_zero + other.at_zero,
        )

    def scale(self, factor) -> "PiecewiseExpPoly":
        c = as_rational(factor)
        return PiecewiseExpPoly(
            tuple(ExpPolyTerm(t.coeff * c, t.power, t.rate) for t in self.neg_side),
            tuple(ExpPolyTerm(t.coeff * c, t.power, t.rate) for t in self.pos_side),
            self.at_zero * c,
        )

    def shift_power(self, k: int) -> "PiecewiseExpPoly":
        """Multiply by x^k; for k >= 1 the value at 0 becomes 0."""
        if k < 0:
            raise DomainError(f"power shift must be nonnegative, got {k}")
        if k == 0:
            return self
        return PiecewiseExpPoly(
            tuple(ExpPolyTerm(t.coeff, t.power + k, t.rate) for t in self.neg_side),
            tuple(ExpPolyTerm(t.coeff, t.power + k, t.rate) for t in self.pos_side),
            mpq(0),
        )

    def mirror(self) -> "PiecewiseExpPoly":
        """The reflected function x -> f(-x)."""
        def flip(terms):
            return tuple(
                ExpPolyTerm(-t.coeff if t.power % 2 else t.coeff, t.power, -t.rate)
                for t in terms
            )

        return PiecewiseExpPoly(flip(self.pos_side), flip(self.neg_side), self.at_zero)

    # -- serialization ------------------------------------------------------

    def to_json_dict(self) -> dict:
        def side(terms):
            return [
                {"c": format_rational(t.coeff), "p": t.power, "r": format_rational(t.rate)}
                for t in terms
            ]

        return {
            "neg": side(self.neg_side),
            "pos": side(self.pos_side),
            "zero": format_rational(self.at_zero),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, data: dict) -> "PiecewiseExpPoly":
        def side(items):
            return tuple(
                ExpPolyTerm(parse_rational(i["c"]), int(i["p"]), parse_rational(i["r"]))
                for i in items
            )

        return cls(side(data["neg"]), side(data["pos"]), parse_rational(data["zero"]))

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseExpPoly":
        return cls.from_json_dict(json.loads(text))


def _antiderivative_coeffs(term: ExpPolyTerm) -> tuple[Rational, ...]:
    """Polynomial part of the antiderivative of c x^p e^(r x).

    The antiderivative is e^(r x) * sum_s d_s x^s with
    d_s = c (-1)^(p-s) p!/(s!) / r^(p-s+1).
    """
    p, r, c = term.power, term.rate, term.coeff
    coeffs = []
    for s in range(p + 1):
        d = c * gamma_int(p + 1) / gamma_int(s + 1) / r ** (p - s + 1)
        coeffs.append(-d if (p - s) % 2 else d)
    return tuple(coeffs)


def _antiderivative_at(term: ExpPolyTerm, xf, prec: int) -> mpmath.mpf:
    poly = mp.mpf(0)
    for d in reversed(_antiderivative_coeffs(term)):
        poly = poly * xf + to_bigfloat(d, prec)
    return poly * mp.exp(to_bigfloat(term.rate, prec) * xf)


def _antiderivative_at_zero(term: ExpPolyTerm) -> Rational:
    return _antiderivative_coeffs(term)[0]


def float_evaluator(f: PiecewiseExpPoly):
    """Vectorized float64 evaluator for grid work (CLI, plots, histograms).

    Exactness is not needed there; coefficients are converted once.
    """
    def side_arrays(terms):
        coeffs = np.array([float(t.coeff) for t in terms])
        powers = np.array([t.power for t in terms])
        rates = np.array([float(t.rate) for t in terms])
        return coeffs, powers, rates

    nc, npow, nr = side_arrays(f.neg_side)
    pc, ppow, pr = side_arrays(f.pos_side)
    zero = float(f.at_zero)

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, zero)
        neg = x < 0
        pos = x > 0
        if nc.size and neg.any():
            xs = x[neg][:, None]
            out[neg] = (nc * xs ** npow * np.exp(nr * xs)).sum(axis=1)
        if pc.size and pos.any():
            xs = x[pos][:, None]
            out[pos] = (pc * xs ** ppow * np.exp(pr * xs)).sum(axis=1)
        return out

    return evaluate
