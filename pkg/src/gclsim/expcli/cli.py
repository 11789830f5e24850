"""Command-line entry point.

    gcl-sim run <config> [--out DIR] [--threads K]
                         [--family CL|gCL|lindblad] [--override key=value ...]

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 completed with partial results.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import (AmbiguousFixedPointError, ConfigError, ConvergenceError,
                      InstabilityError)
from .config import load_config, parse_config
from .runners import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gcl-sim",
                                 description="Driven dissipative Kerr-oscillator simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("config", help="path to the experiment config file")
    run.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    run.add_argument("--threads", type=int, default=1, help="worker pool size")
    run.add_argument("--family", default=None, choices=["CL", "gCL", "lindblad"],
                     help="restrict the run to one master-equation family")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                     help="config override, e.g. model.gamma=0.3 (repeatable)")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command != "run":  # pragma: no cover - argparse enforces this
        return EXIT_CONFIG
    overrides = list(args.override)
    if args.family:
        overrides.append(f"experiment.family={args.family}")
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = parse_config(text, overrides=overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = run_experiment(config, out_dir=args.out, threads=args.threads)
    except (ConvergenceError, InstabilityError, AmbiguousFixedPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"wrote {summary['csv']} ({summary['rows']} rows) and {summary['meta']}")
    if summary["partial"]:
        print(f"completed with {len(summary['failures'])} failed points "
              "(see diagnostics in the metadata file)", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
