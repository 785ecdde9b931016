"""Command line entry point.

    ctld run CONFIG [--seed N] [--jobs N]
    ctld compare REPORT_OR_DIR ... [--out table.csv]
    ctld density POTENTIAL [--out density.csv] -- GRID
    ctld selftest

Exit codes: 0 success, 1 configuration or input error, 2 divergence.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import compare as cmp
from .config import ConfigError, ExperimentConfig
from .experiment import (
    EXIT_CONFIG,
    EXIT_DIVERGED,
    EXIT_OK,
    build_objective,
    parse_grid,
    run_experiment,
)
from .objectives import analytic_density


def parse_potential(spec: str) -> dict:
    """``kind[:key=value,...]`` with list values separated by ``/``.

    For example ``double_well:h=6`` or
    ``gaussian_mixture:weights=0.5/0.5,means=-2/2,variances=0.3/0.3``.
    """
    kind, _, rest = spec.partition(":")
    out = {"kind": kind}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError("potential", f"expected key=value, got {item!r}")
        parts = [float(v) for v in value.split("/")]
        out[key] = parts if len(parts) > 1 else parts[0]
    if kind not in ("double_well", "gaussian_mixture"):
        raise ConfigError("potential", f"unknown analytic potential {kind!r}")
    return out


def cmd_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seeds = [args.seed]
    status, messages = run_experiment(cfg, jobs=args.jobs)
    for msg in messages:
        print(msg, file=sys.stderr if status == EXIT_DIVERGED else sys.stdout)
    return status


def cmd_compare(args) -> int:
    rows = cmp.compare(cmp.collect_reports(args.reports))
    print(cmp.format_table(rows))
    if args.out:
        Path(args.out).write_text(cmp.to_csv(rows))
    return EXIT_OK


def cmd_density(args) -> int:
    obj = build_objective(parse_potential(args.potential))
    try:
        table = analytic_density(obj, parse_grid(args.grid))
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from None
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        if table.ndim == 1:
            writer.writerow(["theta", "density"])
            for x, p in zip(table.axes[0].tolist(), table.density.tolist()):
                writer.writerow([repr(x), repr(p)])
        else:
            writer.writerow(["theta0", "theta1", "density"])
            xx, yy = np.meshgrid(*table.axes, indexing="ij")
            for x, y, p in zip(xx.ravel().tolist(), yy.ravel().tolist(),
                               table.density.ravel().tolist()):
                writer.writerow([repr(x), repr(y), repr(p)])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    return EXIT_OK if run_selftest() else EXIT_CONFIG


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctld", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a configured experiment")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None, help="override the configured seeds")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (one seed each)")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("compare", help="tabulate reports from several runs")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", default=None, help="also write the table as CSV")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("density", help="dump an analytic density on a grid")
    p.add_argument("potential")
    p.add_argument("grid", help="lo:hi:n, or lo:hi:n x lo:hi:n for 2-D; put -- before a negative lower bound")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_density)

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    p.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        # reader went away, e.g. piped into head
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
