"""Command-line front end.

Subcommands: ``design`` (generate point sets), ``kernel-eval`` (evaluate a
kernel spec), ``krige`` (fit and export a prediction trace), ``study`` (run
a convergence study from a JSON config), ``rates`` (fit log-log slopes from
a rows CSV), and ``plot`` (render the convergence SVG).  Machine-readable
JSON goes to stdout, diagnostics to stderr.  Exit codes: 0 success, 1
validation error, 2 numerical failure.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .analysis import fit_rate
from .experiments import ConfigError, StudyConfig, run_study
from .functions import target_from_json
from .geometry import Region, load_design_csv, make_design
from .kernels import make_kernel, spec_from_json
from .kriging import FactorizationFailed, NumericalBreakdown, fit, predict_mean_many, predict_variance_many

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def _json_out(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _parse_bounds(text, dim):
    vals = [float(v) for v in text.split(",")]
    if dim == 1 and len(vals) == 2:
        return Region.interval(vals[0], vals[1])
    if dim == 2 and len(vals) == 2:
        return Region((vals[0],) * 2, (vals[1],) * 2)
    if dim == 2 and len(vals) == 4:
        return Region((vals[0], vals[2]), (vals[1], vals[3]))
    raise ValueError("bounds must be 'a,b' (per-axis box) or 'a0,b0,a1,b1' in d=2")


def _load_json_arg(text):
    """Inline JSON, or @path to read it from a file."""
    if text.startswith("@"):
        with open(text[1:]) as fh:
            return json.load(fh)
    return json.loads(text)


def cmd_design(args):
    region = _parse_bounds(args.bounds, args.dim)
    kind = {"midpoint": "midpoint-grid", "jittered": "jittered-grid", "iid": "iid-uniform"}.get(
        args.kind, args.kind
    )
    design = make_design(kind, args.n, region, seed=args.seed, fill_resolution=args.fill_resolution)
    design.to_csv(args.out)
    _json_out({"h": design.h, "q": design.q, "rho": design.rho, "n": design.n})
    return EXIT_OK


def cmd_kernel_eval(args):
    spec = spec_from_json(_load_json_arg(args.spec))
    kernel = make_kernel(spec)
    if args.table_out is not None:
        if not hasattr(kernel, "table"):
            raise ValueError("--table-out is only meaningful for wavelet kernels")
        kernel.table.to_csv(args.table_out)
    out = {}
    if args.x is not None:
        if args.y is None:
            raise ValueError("kernel evaluation needs both --x and --y")
        x = [float(v) for v in args.x.split(",")]
        y = [float(v) for v in args.y.split(",")]
        out["value"] = kernel.eval(np.array(x), np.array(y))
    out["smoothness"] = kernel.smoothness
    _json_out(out)
    return EXIT_OK


def cmd_krige(args):
    spec = spec_from_json(_load_json_arg(args.spec))
    kernel = make_kernel(spec)
    region = _parse_bounds(args.bounds, 1)
    design = load_design_csv(args.design, region=region)
    if args.y is not None:
        y = np.loadtxt(args.y, ndmin=1)
        target = None
    else:
        if args.target is None:
            raise ValueError("provide observations via --y or a target via --target")
        target = target_from_json(_load_json_arg(args.target))
        y = target(design.points[:, 0])
    model = fit(kernel, design, y, args.nugget)
    grid = np.linspace(region.lower[0], region.upper[0], args.grid)
    mean = predict_mean_many(model, grid)
    var = predict_variance_many(model, grid)
    with open(args.out, "w") as fh:
        fh.write("x,mean,variance\n")
        for row in zip(grid, mean, var):
            fh.write(",".join("%.17g" % v for v in row) + "\n")
    _json_out({"n": design.n, "nugget": model.nugget, "rel_residual": model.rel_residual})
    return EXIT_OK


def cmd_study(args):
    cfg = StudyConfig.from_json_file(args.config)
    result = run_study(cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    rows_path = os.path.join(args.out_dir, "rows.csv")
    result.to_csv(rows_path)
    summary = result.summary_dict()
    with open(os.path.join(args.out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    from .plotting import plot_study_result

    plot_study_result(result, os.path.join(args.out_dir, "convergence.svg"))
    _json_out(summary)
    return EXIT_OK


def _read_rows_csv(path, required=("n", "l2")):
    with open(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty rows CSV")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"{path}: rows CSV is missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: rows CSV has a header but no rows")
    return rows


def cmd_rates(args):
    rows = _read_rows_csv(args.rows)
    ns = [int(r["n"]) for r in rows]
    out = {"l2": fit_rate([(n, float(r["l2"])) for n, r in zip(ns, rows)]).to_json_dict()}
    if "linf" in rows[0]:
        out["linf"] = fit_rate([(n, float(r["linf"])) for n, r in zip(ns, rows)]).to_json_dict()
    if args.out is not None:
        with open(args.out, "w") as fh:
            json.dump(out, fh, sort_keys=True, indent=2)
            fh.write("\n")
    _json_out(out)
    return EXIT_OK


def cmd_plot(args):
    from .plotting import plot_rows

    rows = _read_rows_csv(args.rows)
    ns = [int(r["n"]) for r in rows]
    series = {"l2": [float(r["l2"]) for r in rows]}
    if "linf" in rows[0]:
        series["linf"] = [float(r["linf"]) for r in rows]
    plot_rows(ns, series, args.out)
    _json_out({"plot": args.out, "rows": len(ns)})
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="miskrige",
        description="kriging with misspecified kernels: designs, kernels, fits, and rate studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="generate a design-point set")
    d.add_argument("--kind", default="midpoint", help="midpoint | jittered | iid")
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--dim", type=int, default=1, choices=(1, 2))
    d.add_argument("--bounds", default="0,1")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--fill-resolution", type=int, default=None)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_design)

    k = sub.add_parser("kernel-eval", help="evaluate a kernel spec at a point pair")
    k.add_argument("--spec", required=True, help="inline JSON or @file")
    k.add_argument("--x")
    k.add_argument("--y")
    k.add_argument("--table-out", help="export the wavelet table as CSV (columns x,phi,psi)")
    k.set_defaults(func=cmd_kernel_eval)

    g = sub.add_parser("krige", help="fit a kriging model and export a prediction trace")
    g.add_argument("--spec", required=True)
    g.add_argument("--design", required=True)
    g.add_argument("--y", help="observations, one value per line")
    g.add_argument("--target", help="target JSON evaluated at the design points")
    g.add_argument("--nugget", type=float, default=0.0)
    g.add_argument("--bounds", default="0,1")
    g.add_argument("--grid", type=int, default=201)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_krige)

    s = sub.add_parser("study", help="run a convergence study from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_study)

    r = sub.add_parser("rates", help="fit log-log rates from a rows CSV")
    r.add_argument("--rows", required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_rates)

    p = sub.add_parser("plot", help="render a log-log convergence SVG from a rows CSV")
    p.add_argument("--rows", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, TypeError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FactorizationFailed, NumericalBreakdown) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
