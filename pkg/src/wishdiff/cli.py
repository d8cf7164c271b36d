"""Command line interface.

One binary, machine-readable output: CSV tables for grids and histograms,
JSON for scalar reports.  Identical invocations (including the seed) produce
byte-identical artifacts.  Weights are accepted only as exact rationals
("p/q" or integers); decimals are rejected with an explanation.

Exit codes: 0 success, 2 invalid arguments, 3 unsupported parameters,
4 internal consistency or numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import asymptotic as asym
from . import helstrom as hel
from . import montecarlo as mc
from .diagonal_law import EnsembleParams, build_ftilde, build_w
from .errors import (
    DomainError,
    InternalConsistencyError,
    NumericError,
    UnsupportedParametersError,
)
from .exact_spectral import Oracle1, correlation, density
from .exppoly import float_evaluator
from .positivity import abs_moment, moment, positivity_report
from .specfun import format_rational, parse_rational, to_bigfloat
from .verify import run_verification

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNSUPPORTED = 3
EXIT_INTERNAL = 4


def _rational_arg(text: str):
    try:
        return parse_rational(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grid_arg(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:steps, got {text!r}")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:steps, got {text!r}") from None
    if steps < 2:
        raise argparse.ArgumentTypeError(f"grid needs at least 2 steps, got {steps}")
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"grid needs lo < hi, got {text!r}")
    return lo, hi, steps


def _points_arg(text: str):
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"points must be comma-separated numbers, got {text!r}") from None


def _default_workers() -> int:
    env = os.environ.get("WISHDIFF_WORKERS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        return 1


def _write(path: str, content: str):
    if path == "-":
        sys.stdout.write(content)
    else:
        with open(path, "w") as fh:
            fh.write(content)


def _csv(header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(c) if isinstance(c, float) else str(c) for c in row))
    return "\n".join(lines) + "\n"


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _exact_pair(value) -> dict:
    return {
        "exact": format_rational(value),
        "decimal": float(f"{float(value):.15g}"),
    }


def _params_from(args) -> EnsembleParams:
    return EnsembleParams(args.n, args.n1, args.n2, args.a1, args.a2)


def _params_dict(p: EnsembleParams) -> dict:
    return {
        "n": p.n,
        "n1": p.n1,
        "n2": p.n2,
        "a1": format_rational(p.a1),
        "a2": format_rational(p.a2),
    }


def _add_ensemble_args(sub, with_n=True):
    if with_n:
        sub.add_argument("--n", type=int, required=True, help="matrix dimension")
    sub.add_argument("--n1", type=int, required=True, help="degrees of freedom 1")
    sub.add_argument("--n2", type=int, required=True, help="degrees of freedom 2")
    sub.add_argument("--a1", type=_rational_arg, required=True, help="weight a1 (p/q)")
    sub.add_argument("--a2", type=_rational_arg, required=True, help="weight a2 (p/q)")


def _add_output_args(sub, summary=False):
    sub.add_argument("--output", default="-", help="output path or - for stdout")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    if summary:
        sub.add_argument(
            "--summary", default="-", help="path for the JSON summary (- for stdout)"
        )


# -- subcommand implementations -------------------------------------------------


def _cmd_wlaw(args) -> int:
    # w depends only on (n1, n2, a1, a2); n = 1 is always a valid carrier
    params = EnsembleParams(1, args.n1, args.n2, args.a1, args.a2)
    f = build_w(params) if args.deriv == 1 else build_ftilde(params, args.deriv)
    lo, hi, steps = args.grid
    xs = np.linspace(lo, hi, steps)
    ys = float_evaluator(f)(xs)
    if args.format == "csv":
        _write(args.output, _csv(["lambda", "value"], zip(xs.tolist(), ys.tolist())))
    else:
        payload = {
            "n1": args.n1,
            "n2": args.n2,
            "a1": format_rational(args.a1),
            "a2": format_rational(args.a2),
            "deriv": args.deriv,
            "lambda": xs.tolist(),
            "value": ys.tolist(),
        }
        if args.exact_form:
            payload["exact_form"] = f.to_json_dict()
        _write(args.output, _json_text(payload))
    return EXIT_OK


def _cmd_density(args) -> int:
    params = _params_from(args)
    lo, hi, steps = args.grid
    xs = np.linspace(lo, hi, steps)
    d = density(params)
    if args.oracle:
        oracle = Oracle1(params)
        ys = np.array([float(oracle.density(x)) for x in xs])
    else:
        ys = float_evaluator(d)(xs)
    if args.format == "csv":
        _write(args.output, _csv(["lambda", "p"], zip(xs.tolist(), ys.tolist())))
    else:
        payload = {
            "params": _params_dict(params),
            "oracle": bool(args.oracle),
            "lambda": xs.tolist(),
            "p": ys.tolist(),
        }
        if args.exact_form:
            payload["exact_form"] = d.to_json_dict()
        _write(args.output, _json_text(payload))
    return EXIT_OK


def _cmd_correlate(args) -> int:
    params = _params_from(args)
    value = correlation(params, args.points)
    payload = {
        "params": _params_dict(params),
        "points": list(args.points),
        "r": len(args.points),
        "correlation": float(value),
    }
    _write(args.output, _json_text(payload))
    return EXIT_OK


def _cmd_positivity(args) -> int:
    params = _params_from(args)
    rep = positivity_report(params)
    payload = {
        "params": _params_dict(params),
        "P_plus": _exact_pair(rep.p_all_pos),
        "P_minus": _exact_pair(rep.p_all_neg),
        "p_plus": _exact_pair(rep.frac_pos),
        "p_minus": _exact_pair(rep.frac_neg),
    }
    _write(args.output, _json_text(payload))
    return EXIT_OK


def _cmd_moments(args) -> int:
    params = _params_from(args)
    cap = max(args.gamma_max, 12)
    moments = {
        str(g): _exact_pair(moment(params, g, cap)) for g in range(args.gamma_max + 1)
    }
    abs_moments = {
        str(g): _exact_pair(abs_moment(params, g, cap))
        for g in range(args.gamma_max + 1)
    }
    payload = {
        "params": _params_dict(params),
        "moments": moments,
        "abs_moments": abs_moments,
    }
    _write(args.output, _json_text(payload))
    return EXIT_OK


def _cmd_asymptotic(args) -> int:
    by_ratio = args.c1 is not None
    if by_ratio:
        model = asym.make_model(args.c1, args.c2, args.alpha1, args.alpha2)
    else:
        model = asym.from_unscaled(args.n, args.n1, args.n2, args.a1, args.a2)
    lo, hi, steps = args.grid if args.grid else (model.lam_minus, model.lam_plus, 400)
    xs = np.linspace(lo, hi, steps)
    ys = asym.density_grid(model, xs)
    _write(args.output, _csv(["lambda", "p_hat"], zip(xs.tolist(), ys.tolist())))
    summary = {
        "c1": format_rational(model.c1),
        "c2": format_rational(model.c2),
        "alpha1": format_rational(model.alpha1),
        "alpha2": format_rational(model.alpha2),
        "support": [model.lam_minus, model.lam_plus],
    }
    _write(args.summary, _json_text(summary))
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if args.samples < 1:
        raise DomainError(f"sample count must be positive, got {args.samples}")
    workers = args.workers or _default_workers()
    if args.density_matrices:
        spec = mc.simulate_sigma(
            args.n, args.n1, args.n2, args.samples, args.seed, workers, args.bins
        )
    else:
        params = _params_from(args)
        spec = mc.simulate_diff(params, args.samples, args.seed, workers, args.bins)
    dens = spec.histogram_density()
    rows = zip(
        spec.bin_edges[:-1].tolist(),
        spec.bin_edges[1:].tolist(),
        spec.counts.tolist(),
        dens.tolist(),
    )
    _write(args.output, _csv(["bin_lo", "bin_hi", "count", "density"], rows))

    summary = {
        "samples": args.samples,
        "eigenvalues": spec.count,
        "seed": args.seed,
        "workers": workers,
        "mean": float(spec.samples.mean()),
        "variance": float(spec.samples.var()),
        "ks_vs_exact": None,
        "ks_vs_asymptotic": None,
    }
    if args.density_matrices:
        try:
            fx, swapped = hel.lookup_fixture(args.n, args.n1, args.n2)
            summary["ks_vs_exact"] = mc.ks_distance(
                spec, hel.fixture_cdf_callable(fx, swapped)
            )
        except UnsupportedParametersError:
            pass
        model = hel.helstrom_asymptotic(args.n, args.n1, args.n2)
    else:
        if args.n <= 10:
            summary["ks_vs_exact"] = mc.ks_distance(
                spec, mc.exact_cdf_callable(density(params))
            )
        model = asym.from_unscaled(args.n, args.n1, args.n2, args.a1, args.a2)
    summary["ks_vs_asymptotic"] = mc.ks_distance(spec, asym.cdf_callable(model))
    _write(args.summary, _json_text(summary))
    return EXIT_OK


def _cmd_helstrom(args) -> int:
    if args.n < 2:
        raise UnsupportedParametersError(
            "the difference of two 1-dimensional density matrices is identically zero"
        )
    if args.n1 < args.n or args.n2 < args.n:
        raise DomainError(
            f"need n <= n1, n2; got n={args.n}, n1={args.n1}, n2={args.n2}"
        )
    lo, hi, steps = args.grid
    xs = np.linspace(lo, hi, steps)

    backend = None
    abs_mean = None
    positive_fraction = None
    if args.simulate is not None:
        backend = "mc"
    elif args.asymptotic:
        backend = "asymptotic"
    else:
        try:
            hel.lookup_fixture(args.n, args.n1, args.n2)
            backend = "fixture"
        except UnsupportedParametersError:
            backend = "asymptotic" if args.n >= 10 else "mc"

    if backend == "fixture":
        fx, swapped = hel.lookup_fixture(args.n, args.n1, args.n2)
        ys = _fixture_float_evaluator(fx, swapped)(xs)
        abs_mean = format_rational(hel.fixture_abs_mean(fx))
        pf = hel.positivity_fraction_sigma(args.n, args.n1, args.n2)
        positive_fraction = format_rational(pf)
    elif backend == "asymptotic":
        model = hel.helstrom_asymptotic(args.n, args.n1, args.n2)
        ys = asym.density_grid(model, xs)
    else:
        samples = args.simulate if args.simulate is not None else 100000
        if samples < 1:
            raise DomainError(f"sample count must be positive, got {samples}")
        workers = args.workers or _default_workers()
        spec = mc.simulate_sigma(
            args.n, args.n1, args.n2, samples, args.seed, workers, args.bins
        )
        centers = (spec.bin_edges[:-1] + spec.bin_edges[1:]) / 2.0
        ys = np.interp(xs, centers, spec.histogram_density(), left=0.0, right=0.0)

    _write(args.output, _csv(["x", "p_sigma"], zip(xs.tolist(), ys.tolist())))
    summary = {
        "n": args.n,
        "n1": args.n1,
        "n2": args.n2,
        "backend": backend,
        "abs_mean": abs_mean,
        "positive_fraction": positive_fraction,
    }
    _write(args.summary, _json_text(summary))
    return EXIT_OK


def _fixture_float_evaluator(fx, swapped: bool):
    neg = [float(c) for c in fx.neg_poly]
    pos = [float(c) for c in fx.pos_poly]
    if swapped:
        neg, pos = (
            [c * (-1.0) ** i for i, c in enumerate(pos)],
            [c * (-1.0) ** i for i, c in enumerate(neg)],
        )

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        m_neg = (x >= -1) & (x < 0)
        m_pos = (x >= 0) & (x <= 1)
        out[m_neg] = np.polyval(neg[::-1], x[m_neg])
        out[m_pos] = np.polyval(pos[::-1], x[m_pos])
        return out

    return evaluate


def _cmd_verify(args) -> int:
    params = _params_from(args)
    results = run_verification(params)
    lines = []
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        detail = f"  ({res.detail})" if res.detail else ""
        lines.append(f"{status}  {res.name}{detail}")
    _write(args.output, "\n".join(lines) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INTERNAL


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wishdiff",
        description="Spectral statistics for weighted differences of complex "
        "Wishart matrices and of random density matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wlaw", help="diagonal-element law and its derivatives")
    _add_ensemble_args(p, with_n=False)
    p.add_argument("--deriv", type=int, default=1, metavar="J",
                   help="1 for the law itself, j for the (j-1)-th derivative")
    p.add_argument("--grid", type=_grid_arg, default=(-5.0, 5.0, 201))
    p.add_argument("--exact-form", action="store_true",
                   help="include the exact JSON form (json format only)")
    _add_output_args(p)
    p.set_defaults(func=_cmd_wlaw)

    p = sub.add_parser("density", help="exact finite-n spectral density")
    _add_ensemble_args(p)
    p.add_argument("--grid", type=_grid_arg, required=True)
    p.add_argument("--oracle", action="store_true",
                   help="evaluate through the floating-point cross-check route")
    p.add_argument("--exact-form", action="store_true")
    _add_output_args(p)
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("correlate", help="r-point correlation function")
    _add_ensemble_args(p)
    p.add_argument("--points", type=_points_arg, required=True,
                   help="comma-separated evaluation points")
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("positivity", help="positivity probabilities")
    _add_ensemble_args(p)
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_positivity)

    p = sub.add_parser("moments", help="exact spectral moments")
    _add_ensemble_args(p)
    p.add_argument("--gamma-max", type=int, default=4)
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_moments)

    p = sub.add_parser("asymptotic", help="large-dimension density")
    p.add_argument("--n", type=int)
    p.add_argument("--n1", type=int)
    p.add_argument("--n2", type=int)
    p.add_argument("--a1", type=_rational_arg)
    p.add_argument("--a2", type=_rational_arg)
    p.add_argument("--c1", type=_rational_arg)
    p.add_argument("--c2", type=_rational_arg)
    p.add_argument("--alpha1", type=_rational_arg)
    p.add_argument("--alpha2", type=_rational_arg)
    p.add_argument("--grid", type=_grid_arg)
    p.add_argument("--output", default="-")
    p.add_argument("--summary", default="-")
    p.set_defaults(func=_cmd_asymptotic)

    p = sub.add_parser("simulate", help="Monte Carlo eigenvalue histogram")
    _add_ensemble_args(p)
    p.add_argument("--samples", type=int, required=True, help="matrix draws")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=80)
    p.add_argument("--workers", type=int, default=0,
                   help="0 means WISHDIFF_WORKERS or 1")
    p.add_argument("--density-matrices", action="store_true",
                   help="sample differences of random density matrices instead")
    p.add_argument("--output", default="-")
    p.add_argument("--summary", default="-")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("helstrom", help="difference of two random density matrices")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--grid", type=_grid_arg, default=(-1.0, 1.0, 401))
    group = p.add_mutually_exclusive_group()
    group.add_argument("--simulate", type=int, metavar="N",
                       help="force the Monte Carlo backend with N draws")
    group.add_argument("--asymptotic", action="store_true",
                       help="force the large-dimension backend")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=80)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--output", default="-")
    p.add_argument("--summary", default="-")
    p.set_defaults(func=_cmd_helstrom)

    p = sub.add_parser("verify", help="run the exact-identity self-test suite")
    _add_ensemble_args(p)
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_verify)

    return parser


def _validate_asymptotic_args(parser, args):
    if args.command != "asymptotic":
        return
    ratio = [args.c1, args.c2, args.alpha1, args.alpha2]
    unscaled = [args.n, args.n1, args.n2, args.a1, args.a2]
    if all(v is not None for v in ratio) and all(v is None for v in unscaled):
        return
    if all(v is not None for v in unscaled) and all(v is None for v in ratio):
        return
    parser.error(
        "provide either --n/--n1/--n2/--a1/--a2 or --c1/--c2/--alpha1/--alpha2"
    )


def _fuse_leading_dash_values(argv: list[str]) -> list[str]:
    """Join option/value pairs whose value starts with a dash.

    argparse would otherwise read "--grid -12:8:400" as two options.
    """
    fused = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in ("--grid", "--points") and i + 1 < len(argv):
            fused.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            fused.append(tok)
            i += 1
    return fused


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_fuse_leading_dash_values(list(argv)))
    _validate_asymptotic_args(parser, args)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except UnsupportedParametersError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (InternalConsistencyError, NumericError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
