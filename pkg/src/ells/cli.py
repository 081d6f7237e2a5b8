"""Command-line driver: ``ells {verify,limitshape,sample,expand}``.

Exit codes: 0 success, 1 verification failure, 2 usage, 3 domain, 4 numerical.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import BranchError, DomainError, EllsError, NoSolutionError, SingularParameterError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3, 4

REFERENCE_COEFFICIENTS = {"a1": -2.0, "a2": 8.0 / 3.0, "b1": 2.0, "b2": 0.0, "b3": 8.0}


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ells", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run an identity verification suite")
    from .verify import SUITES

    v.add_argument("--suite", choices=sorted(SUITES) + ["all"], required=True)
    v.add_argument("--order", type=int, default=None, help="truncation order D")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--samples", type=_positive_int, default=None)
    v.add_argument("--tol", type=float, default=None)

    ls = sub.add_parser("limitshape", help="solve and export the limit shape")
    ls.add_argument("--q", type=float)
    g = ls.add_mutually_exclusive_group()
    g.add_argument("--Lambda", type=float, help="confluent scale; sets M = -Lambda q^-1/2")
    g.add_argument("--M", type=float, help="mass coordinate (M < 0)")
    ls.add_argument("--grid", type=_positive_int, default=None, help="grid size (513; 257 per curve for --figure5)")
    ls.add_argument("--out", type=Path)
    ls.add_argument("--format", choices=["csv", "json", "svg-data"], default="csv")
    ls.add_argument("--compare-vk", action="store_true")
    ls.add_argument("--figure5", type=_float_list, metavar="Q1,Q2,...", help="emit a family of shapes rescaled to x*=1")

    s = sub.add_parser("sample", help="run Metropolis chains")
    s.add_argument("--kind", choices=["elliptic", "macrocanonical"], default="elliptic")
    s.add_argument("--q", type=float, default=0.1)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--Lambda", type=float, default=None)
    g.add_argument("--M", type=float, default=None)
    s.add_argument("--hbar", type=float, default=0.05)
    s.add_argument("--Q", type=float, default=1.0)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--burn-in", type=int, default=None)
    s.add_argument("--chains", type=_positive_int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--thinning", type=_positive_int, default=1000)
    s.add_argument("--grid-points", type=_positive_int, default=121)
    s.add_argument("--out", type=Path)
    s.add_argument("--compare", action="store_true")
    s.add_argument("--tol", type=float, default=0.05, help="sup-distance budget as a fraction of x*")

    e = sub.add_parser("expand", help="fit the small-q expansion coefficients")
    e.add_argument("--q-list", type=_float_list, default=None)
    e.add_argument("--tol", type=float, default=1e-3)
    return ap


def _emit(obj, out: Path | None):
    text = json.dumps(obj, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suite

    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    reports = [run_suite(n, args.order, args.seed, args.samples, args.tol) for n in names]
    ok = all(r.passed for r in reports)
    resolved = {"seed": args.seed}
    body = [r.to_dict() | resolved | {"tol": _resolved_tol(r.identity, args.tol), "residuals": r.residuals} for r in reports]
    _emit(body[0] if len(body) == 1 else {"suites": body, "pass": ok}, None)
    return EXIT_OK if ok else EXIT_FAIL


def _resolved_tol(name: str, tol: float | None) -> float:
    from .verify import DEFAULT_TOL

    return DEFAULT_TOL[name] if tol is None else tol


def _svg_polyline(name: str, x, y) -> str:
    pts = " ".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(x, y))
    return f'<polyline id="{name}" points="{pts}"/>'


def cmd_limitshape(args) -> int:
    from .limitshape import VKShape, normalized_family, solve_limit_shape

    if args.figure5 is not None:
        return _normalized_family(args, normalized_family)
    if args.q is None:
        raise _Usage("--q is required unless --figure5 is given")
    if args.Lambda is None and args.M is None:
        args.Lambda = 1.0
    grid = args.grid or 513
    shape = solve_limit_shape(args.q, M=args.M, Lambda=args.Lambda, n_grid=grid)
    header = {"command": "limitshape", "q": args.q, "M": shape.M, "Lambda": args.Lambda, "grid": grid} | shape.sidecar()
    extra = {}
    if args.compare_vk:
        vk = VKShape(shape.Lambda_eff)
        extra = {"f_vk": vk.f(shape.x), "f1_vk": vk.f1(shape.x), "f2_vk": vk.f2(shape.x)}
    if args.format == "csv":
        out = args.out or Path("limitshape.csv")
        shape.to_csv(out, header, extra)
        sys.stdout.write(json.dumps({"csv": str(out), "sidecar": str(out.with_suffix(".json"))} | shape.sidecar()) + "\n")
    elif args.format == "json":
        d = {"params": header} | shape.to_dict()
        for k, v in extra.items():
            d[k] = [float(a) if np.isfinite(a) else None for a in v]
        _emit(d, args.out)
    else:
        lines = ["<!-- " + json.dumps(header) + " -->", _svg_polyline("f", shape.x, shape.f)]
        if args.compare_vk:
            lines.append(_svg_polyline("f_vk", shape.x, extra["f_vk"]))
        text = "\n".join(lines) + "\n"
        if args.out:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
    return EXIT_OK


def _normalized_family(args, normalized_family) -> int:
    qs = args.figure5
    fam = normalized_family(qs, n_grid=args.grid or 257)
    f0 = {q: float(np.interp(0.0, x, f)) for q, (x, f) in fam.items()}
    order = sorted(f0, key=lambda q: f0[q])
    header = {"command": "limitshape --figure5", "q": qs, "x_star": 1.0, "f_at_0": {str(k): v for k, v in f0.items()}}
    if args.format == "csv":
        out = args.out or Path("family.csv")
        with out.open("w") as fh:
            fh.write("# " + json.dumps(header) + "\n")
            fh.write("q,x,f\n")
            for q, (x, f) in fam.items():
                for a, b in zip(x, f):
                    fh.write(f"{q!r},{float(a)!r},{float(b)!r}\n")
    elif args.format == "json":
        _emit({"params": header, "curves": {str(q): {"x": list(map(float, x)), "f": list(map(float, f))} for q, (x, f) in fam.items()}}, args.out)
    else:
        text = "\n".join(["<!-- " + json.dumps(header) + " -->"] + [_svg_polyline(f"q={q}", x, f) for q, (x, f) in fam.items()]) + "\n"
        if args.out:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
    summary = {"curves": len(fam), "f_at_0": header["f_at_0"], "order_by_f0": order}
    sys.stderr.write(json.dumps(summary) + "\n")
    return EXIT_OK


def cmd_sample(args) -> int:
    from .limitshape import inozemtsev_M, solve_limit_shape
    from .measures import EnsembleParams, MeasureKind
    from .mcmc import ChainConfig, empirical_profile, empirical_vs_analytic, mean_size, run_chains, y_fluctuation

    if args.steps <= 0:
        raise _Usage("--steps must be positive")
    burn = args.steps // 4 if args.burn_in is None else args.burn_in
    if not 0 <= burn < args.steps:
        raise _Usage("--burn-in must lie in [0, steps)")
    if args.kind == "elliptic":
        M = args.M if args.M is not None else inozemtsev_M(args.q, 1.0 if args.Lambda is None else args.Lambda)
        params = EnsembleParams(q=args.q, M=M, hbar=args.hbar)
        kind = MeasureKind.ELLIPTIC
        scale = 2.0 * abs(M) * math.sqrt(args.q) if args.q > 0 else 2.0
    else:
        params = EnsembleParams(Q=args.Q, hbar=args.hbar, Lambda=args.hbar * math.sqrt(args.Q))
        kind = MeasureKind.MACROCANONICAL
        scale = 2.0 * params.Lambda
    shape = None
    if args.compare:
        if kind is not MeasureKind.ELLIPTIC:
            raise _Usage("--compare needs --kind elliptic")
        shape = solve_limit_shape(params.q, M=params.M)
        scale = shape.x_star
    grid = tuple(float(v) for v in np.linspace(-1.5, 1.5, args.grid_points) * scale)
    # half-integer multiples of hbar are never box contents
    ypts = tuple(params.hbar * (round(c * scale / params.hbar) + 0.5) for c in (1.5, 2.0))
    cfg = ChainConfig(params, kind, args.steps, burn, args.seed, args.thinning, grid, ypts)
    traces = run_chains(cfg, args.chains)
    mean, se = mean_size(traces)
    report = {
        "command": "sample",
        "params": {"kind": args.kind, "q": params.q, "M": params.M, "hbar": params.hbar, "Q": params.Q,
                   "steps": args.steps, "burn_in": burn, "chains": args.chains, "seed": args.seed, "thinning": args.thinning},
        "mean_size": mean,
        "mean_size_stderr": se,
        "acceptance": [t.acceptance_rate for t in traces],
    }
    if traces[0].profiles.size:
        report["y_fluctuation"] = [float(v) for v in y_fluctuation(traces)]
    ok = True
    if shape is not None:
        cmp = empirical_vs_analytic(empirical_profile(traces), shape)
        report["comparison"] = cmp.to_dict() | {"tolerance": args.tol}
        ok = cmp.relative_sup < args.tol
        report["pass"] = ok
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        for t in traces:
            t.to_csv(args.out / f"trace_chain{t.chain}.csv", header=report["params"], every=args.thinning)
            t.save_profiles(args.out / f"profiles_chain{t.chain}.npz")
        (args.out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    _emit(report, None)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_expand(args) -> int:
    from .limitshape import DEFAULT_SERIES_Q, series_coefficients

    qs = args.q_list or list(DEFAULT_SERIES_Q)
    if len(qs) < 4:
        raise _Usage("--q-list needs at least 4 nomes")
    try:
        fit = series_coefficients(qs)
    except np.linalg.LinAlgError as exc:
        raise _Numeric(str(exc)) from exc
    if not (np.all(np.isfinite(fit.a)) and np.all(np.isfinite(fit.b))):
        raise _Numeric("non-finite fit")
    fitted = {"a1": fit.a1, "a2": fit.a2, "b1": fit.b1, "b2": float(fit.b[1]), "b3": float(fit.b[2])}
    table = {k: {"fitted": fitted[k], "reference": REFERENCE_COEFFICIENTS[k]} for k in fitted}
    gated = ("a1", "a2", "b1")
    ok = all(abs(fitted[k] - REFERENCE_COEFFICIENTS[k]) < args.tol for k in gated)
    _emit({"q_list": qs, "coefficients": table, "gated": list(gated), "tolerance": args.tol, "pass": ok} | fit.to_dict(), None)
    return EXIT_OK if ok else EXIT_FAIL


class _Usage(Exception):
    pass


class _Numeric(Exception):
    pass


COMMANDS = {"verify": cmd_verify, "limitshape": cmd_limitshape, "sample": cmd_sample, "expand": cmd_expand}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"ells: error: {exc}\n")
        return EXIT_USAGE
    except (DomainError, BranchError, NoSolutionError, SingularParameterError) as exc:
        sys.stderr.write(f"ells: domain error: {exc}\n")
        return EXIT_DOMAIN
    except (_Numeric, EllsError, FloatingPointError, ArithmeticError) as exc:
        sys.stderr.write(f"ells: numerical failure: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
