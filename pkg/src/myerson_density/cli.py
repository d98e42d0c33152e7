"""Command-line front end.

Exit codes: 0 success, 2 usage or parse error, 3 insufficient data,
4 invalid parameter, 5 failed internal assertion.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import distributions as dist
from .empirical import format_float, read_values_csv, write_values_csv
from .errors import (
    CertificateError,
    DomainError,
    ExperimentError,
    InsufficientDataError,
    InvalidParameterError,
    ParseError,
)
from .estimator import DEFAULT_GRID_POINTS, estimate_density, fit
from .inference import ChernoffApprox, confidence_interval
from .minimax import build_certificate
from .montecarlo import McConfig, run_coverage_experiment, run_rate_experiment

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PARAM, EXIT_INTERNAL = 0, 2, 3, 4, 5

FAMILY_PARAMS = {
    "uniform": ("lo", "hi"),
    "trunc_exp": ("rate", "lo", "hi"),
    "perturbed_uniform": ("delta",),
    "gap_mixture": ("w", "lo1", "hi1", "lo2", "hi2"),
}


def _add_dist_args(p: argparse.ArgumentParser, required: bool = True):
    g = p.add_argument_group("distribution")
    g.add_argument("--family", choices=sorted(FAMILY_PARAMS), required=required)
    for name in ("lo", "hi", "rate", "delta", "w", "lo1", "hi1", "lo2", "hi2"):
        g.add_argument(f"--{name}", type=float)


def _spec_from_args(args) -> dist.DistributionSpec:
    params = {k: getattr(args, k) for k in FAMILY_PARAMS[args.family] if getattr(args, k) is not None}
    if args.family == "perturbed_uniform" and "delta" not in params:
        raise ParseError("--delta is required for perturbed_uniform")
    return dist.from_dict({"family": args.family, **params})


def _n_grid(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _dump(obj: dict) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _load_table(path: str | None) -> ChernoffApprox:
    if path is None:
        return ChernoffApprox()
    try:
        return ChernoffApprox.from_json(path)
    except (OSError, json.JSONDecodeError, InvalidParameterError) as exc:
        raise ParseError(f"quantile table {path}: {exc}") from None


def _check_input(path: str):
    if not Path(path).is_file():
        raise ParseError(f"cannot read input file {path}")


def cmd_simulate(args):
    spec = _spec_from_args(args)
    data = dist.sample(spec, args.n, args.seed)
    if args.out is None:
        sys.stdout.write("value\n" + "".join(format_float(x) + "\n" for x in data.values))
    else:
        write_values_csv(data.values, args.out)


def cmd_estimate(args):
    _check_input(args.input)
    data = read_values_csv(args.input)
    fd = fit(data, args.a, args.b)
    a, b = fd.interval
    est = estimate_density(data, grid=np.linspace(a, b, args.grid_points), fitted=fd)
    _emit(est.to_csv() if args.format == "csv" else est.to_json() + "\n", args.out)


def cmd_infer(args):
    _check_input(args.input)
    approx = _load_table(args.quantile_table)
    data = read_values_csv(args.input)
    res = confidence_interval(data, args.v, args.level, approx, args.a, args.b)
    d = res.to_dict()
    if args.format == "json":
        _emit(_dump(d), args.out)
        return
    d["interval_lo"], d["interval_hi"] = d.pop("interval")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(d.keys())
    w.writerow(format_float(x) if isinstance(x, float) else x for x in d.values())
    _emit(buf.getvalue(), args.out)


def _mc_config(args) -> McConfig:
    interval = None
    if args.a is not None or args.b is not None:
        if args.a is None or args.b is None:
            raise ParseError("--a and --b must be given together")
        interval = (args.a, args.b)
    return McConfig(
        spec=_spec_from_args(args),
        v=args.v,
        n_grid=args.n_grid,
        reps=args.reps,
        seed=args.seed,
        level=getattr(args, "level", 0.95),
        interval=interval,
    )


def _write_report(report, args):
    _emit(report.to_json() + "\n", args.out)
    if args.csv:
        Path(args.csv).write_text(report.per_n_csv())
    if args.replications_csv:
        Path(args.replications_csv).write_text(report.replications_csv())


def cmd_rate(args):
    _write_report(run_rate_experiment(_mc_config(args), workers=args.workers), args)


def cmd_coverage(args):
    approx = _load_table(args.quantile_table)
    _write_report(run_coverage_experiment(_mc_config(args), workers=args.workers, approx=approx), args)


def cmd_minimax(args):
    _emit(_dump(build_certificate(args.n).to_dict()), args.out)


def cmd_regularity(args):
    spec = _spec_from_args(args)
    report = dist.check_regularity(spec, args.grid_size, args.tol)
    _emit(_dump({"spec": spec.to_dict(), **report.to_dict()}), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="myerson-density",
        description="Shape-constrained density estimation for auction valuations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a sample from a built-in family")
    _add_dist_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="density estimate on a grid")
    p.add_argument("input", help="CSV with one value per line")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--grid-points", type=int, default=DEFAULT_GRID_POINTS)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("infer", help="pointwise confidence interval")
    p.add_argument("input")
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--quantile-table", help='JSON list of {"p": ..., "q": ...}')
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out")
    p.set_defaults(func=cmd_infer)

    for name, func, helptext in (
        ("rate", cmd_rate, "Monte Carlo convergence-rate experiment"),
        ("coverage", cmd_coverage, "Monte Carlo confidence-interval coverage"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_dist_args(p)
        p.add_argument("--v", type=float, required=True)
        p.add_argument("--n-grid", type=_n_grid, default=[500, 2000, 8000, 32000])
        p.add_argument("--reps", type=int, default=200)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--a", type=float)
        p.add_argument("--b", type=float)
        p.add_argument("--workers", type=int, help="parallel workers (default: MG_THREADS or 1)")
        p.add_argument("--out", help="JSON report path")
        p.add_argument("--csv", help="per-n CSV path")
        p.add_argument("--replications-csv", help="per-replication CSV path")
        if name == "coverage":
            p.add_argument("--level", type=float, default=0.95)
            p.add_argument("--quantile-table")
        p.set_defaults(func=func)

    p = sub.add_parser("minimax", help="lower-bound certificate for sample size n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_minimax)

    p = sub.add_parser("regularity", help="Myerson regularity check for a family")
    _add_dist_args(p)
    p.add_argument("--grid-size", type=int, default=dist.DEFAULT_REGULARITY_GRID)
    p.add_argument("--tol", type=float, default=dist.DEFAULT_REGULARITY_TOL)
    p.add_argument("--out")
    p.set_defaults(func=cmd_regularity)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ParseError as exc:
        code, msg = EXIT_USAGE, exc
    except InsufficientDataError as exc:
        code, msg = EXIT_DATA, exc
    except (InvalidParameterError, DomainError) as exc:
        code, msg = EXIT_PARAM, exc
    except (CertificateError, ExperimentError) as exc:
        code, msg = EXIT_INTERNAL, exc
    else:
        return EXIT_OK
    print(f"error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
