"""Exact-identity verification suite.

Every identity here must hold exactly (rational equality) for any valid
parameter set; running them is the package's self-test contract, exposed on
the command line as ``wishdiff verify``.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from .diagonal_law import (
    EnsembleParams,
    build_diagonal_law,
    build_ftilde,
    build_w,
    check_smoothness,
    ftilde_at_zero,
    max_derivative_order,
)
from .exact_spectral import (
    build_kernel,
    build_moment_matrix,
    density,
    normalization,
    normalization_closed_form,
    rational_det,
)
from .exppoly import ExpPolyTerm, PiecewiseExpPoly, multiply
from .positivity import moment, positivity_report
from .specfun import gamma_int, hyp1f1_terminating


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _kummer_side_matches(params: EnsembleParams, side: str) -> bool:
    """The finite sum over poles equals the confluent-hypergeometric form."""
    w = build_w(params)
    n1, n2, a1, a2 = params.n1, params.n2, params.a1, params.a2
    rate_arg = (a1 + a2) / (a1 * a2)
    if side == "neg":
        terms, first, length = w.neg_side, 1 - n2, n2
        rate_arg = -rate_arg
    else:
        terms, first, length = w.pos_side, 1 - n1, n1
    coeffs = {t.power: t.coeff for t in terms}
    if set(coeffs) - set(range(length)):
        return False
    running = w.at_zero
    num = mpq(1)
    for i in range(length):
        if coeffs.get(i, mpq(0)) != running:
            return False
        if i + 1 < length:  # the last ratio would divide by a vanished factor
            num = num * (first + i) * rate_arg / ((2 - n1 - n2 + i) * (i + 1))
            running = w.at_zero * num
    return True


def run_verification(params: EnsembleParams) -> list[CheckResult]:
    """Run every exact identity for one parameter set."""
    results: list[CheckResult] = []

    def check(name: str, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # surface, never hide
            results.append(CheckResult(name, False, f"raised {exc!r}"))
            return
        results.append(CheckResult(name, bool(ok), detail))

    n = params.n

    def c_moment_matrix():
        mm = build_moment_matrix(params)  # build itself cross-checks entries
        tri = all(
            mm.entries[j][k] == 0 for j in range(n) for k in range(n) if j > k
        )
        return tri, "closed forms equal integrals; upper triangular"

    check("moment-matrix dual route + upper triangularity", c_moment_matrix)

    def c_normalization():
        mm = build_moment_matrix(params)
        det = rational_det(mm.square_block())
        target = mpq(1)
        for j in range(1, n + 1):
            target *= gamma_int(j + 1)
        if (n * (n - 1) // 2) % 2:
            target = -target
        ok = gamma_int(n + 1) * det == target
        ok = ok and normalization(mm) == normalization_closed_form(n)
        return ok, f"n! det = {gamma_int(n + 1) * det}"

    check("normalization determinant identity", c_normalization)

    def c_density_mass():
        d = density(params)
        mass = d.moment_integral(0, "both")
        mm = build_moment_matrix(params)
        kern = build_kernel(params)
        trace = sum(
            kern.coeff[i][j] * mm.entries[j][i] for i in range(n) for j in range(n)
        )
        return mass == 1 and trace == n, f"mass={mass}, trace={trace}"

    check("density mass 1 and kernel trace n", c_density_mass)

    def c_positivity():
        rep = positivity_report(params)
        ok = rep.frac_pos + rep.frac_neg == 1
        ok = ok and 0 <= rep.p_all_pos <= 1 and 0 <= rep.p_all_neg <= 1
        if params.n1 == params.n2 and params.a1 == params.a2:
            ok = ok and rep.frac_pos == mpq(1, 2) and rep.p_all_pos == rep.p_all_neg
        return ok, f"p+={rep.frac_pos}, P+={rep.p_all_pos}"

    check("positivity fractions", c_positivity)

    def c_moments():
        m1 = moment(params, 1)
        m2 = moment(params, 2)
        n1, n2, a1, a2 = params.n1, params.n2, params.a1, params.a2
        ok = m1 == a1 * n1 - a2 * n2
        ok = ok and m2 == a1**2 * n1 * (n + n1) + a2**2 * n2 * (n + n2) - 2 * a1 * a2 * n1 * n2
        return ok, f"mean={m1}"

    check("first and second moment closed forms", c_moments)

    def c_chain():
        law = build_diagonal_law(params)
        current = law.w
        for j in range(2, min(n, max_derivative_order(params)) + 1):
            current = current.derivative()
            if current != law.basis(j):
                return False, f"mismatch at j={j}"
        return True, ""

    check("derivative chain equals closed forms", c_chain)

    def c_smoothness():
        top = max_derivative_order(params)
        for j in range(2, top + 1):
            if not check_smoothness(params, j):
                return False, f"unexpected kink at j={j}"
        if not check_smoothness(params, top + 1):
            return True, f"smooth through j={top}, kink at {top + 1}"
        return False, f"missing kink at j={top + 1}"

    check("smoothness ladder", c_smoothness)

    def c_kummer():
        ok = _kummer_side_matches(params, "neg") and _kummer_side_matches(params, "pos")
        return ok, ""

    check("confluent-hypergeometric resummation of w", c_kummer)

    def c_zero_forms():
        for j in range(1, max_derivative_order(params) + 1):
            if ftilde_at_zero(params, j, "left") != ftilde_at_zero(params, j, "right"):
                return False, f"forms differ at j={j}"
        return True, ""

    check("two closed forms of the value at zero", c_zero_forms)

    def c_exchange():
        return density(params.swapped()).mirror() == density(params), ""

    check("exchange symmetry of the density", c_exchange)

    if n <= 3:

        def c_idempotence():
            kern = build_kernel(params)
            law = build_diagonal_law(params)
            m = [[None] * n for _ in range(n)]
            for j in range(n):
                basis = law.basis(j + 1)
                for k in range(n):
                    mono = (ExpPolyTerm(mpq(1), k, mpq(0)),)
                    scratch = PiecewiseExpPoly(
                        multiply(basis.neg_side, mono),
                        multiply(basis.pos_side, mono),
                        0,
                    )
                    m[j][k] = scratch.moment_integral(0, "neg") + scratch.moment_integral(
                        0, "pos"
                    )
            b = kern.coeff
            for i in range(n):
                for l in range(n):
                    value = sum(
                        b[i][j] * m[j][k] * b[k][l] for j in range(n) for k in range(n)
                    )
                    if value != b[i][l]:
                        return False, f"entry ({i},{l})"
            return True, ""

        check("kernel idempotence", c_idempotence)

    return results
