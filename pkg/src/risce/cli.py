"""Command-line entry point for the simulation experiments.

Every SystemConfig field is exposed as a flag of the same name, applied on
top of the optional INI config file.  Each experiment writes a CSV and, by
default, a PNG next to it.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace

from .config import INT_FIELDS, SystemConfig, load_config, validate
from .harness import EXPERIMENT_KINDS, ExperimentSpec, run_experiment

__all__ = ["build_parser", "main"]

# Accepted on the command line; "overhead" is shorthand for "overhead-sweep".
_KIND_ALIASES = {"overhead": "overhead-sweep"}

_DEFAULT_TRIALS = {
    "convergence": 100,
    "nmse-sweep": 500,
    "end-to-end": 500,
    "overhead-sweep": 1,
}


def _grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risce",
        description="Two-timescale channel estimation experiments for RIS-aided MIMO.",
    )
    parser.add_argument(
        "--experiment",
        required=True,
        choices=sorted(set(EXPERIMENT_KINDS) | set(_KIND_ALIASES)),
        help="which experiment to run",
    )
    parser.add_argument("--config", metavar="PATH", help="INI config file (keys = field names)")
    parser.add_argument("--out", metavar="PATH", help="output CSV path (default: <experiment>.csv)")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials per sweep point")
    parser.add_argument("--snr-grid-db", type=_grid, help="uplink SNR grid, e.g. 0,5,10")
    parser.add_argument("--sinr-grid-db", type=_grid, help="dual-link SINR grid, e.g. 0,10,20")
    parser.add_argument("--alpha-grid", type=_grid, help="timescale-ratio grid, e.g. 4,8,16,32")
    parser.add_argument(
        "--pin-sinr-db", type=float,
        help="hold the dual-link SINR at this value during SNR sweeps",
    )
    parser.add_argument("--workers", type=int, default=1, help="parallel trial workers")
    parser.add_argument(
        "--trace-out", metavar="PATH",
        help="also write per-subproblem convergence traces to this CSV",
    )
    parser.add_argument(
        "--no-plot", action="store_true",
        help="skip rendering the PNG figure next to the CSV",
    )
    overrides = parser.add_argument_group("config overrides (same names as config fields)")
    for f in fields(SystemConfig):
        overrides.add_argument(
            f"--{f.name}", type=int if f.name in INT_FIELDS else float, default=None,
            help=argparse.SUPPRESS,
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.config is not None:
        try:
            cfg = load_config(args.config)
        except (FileNotFoundError, ValueError) as exc:
            print(f"risce: error: {exc}", file=sys.stderr)
            return 2
    else:
        cfg = SystemConfig()
    overrides = {
        f.name: getattr(args, f.name)
        for f in fields(SystemConfig)
        if getattr(args, f.name) is not None
    }
    if overrides:
        cfg = replace(cfg, **overrides)
    problems = validate(cfg)
    if problems:
        for p in problems:
            print(f"risce: invalid config: {p}", file=sys.stderr)
        return 2

    kind = _KIND_ALIASES.get(args.experiment, args.experiment)
    spec = ExperimentSpec(
        kind=kind,
        trials=args.trials if args.trials is not None else _DEFAULT_TRIALS[kind],
        out=args.out if args.out is not None else f"{kind}.csv",
        workers=args.workers,
        pin_sinr_db=args.pin_sinr_db,
        trace_out=args.trace_out,
    )
    if args.snr_grid_db is not None:
        spec = replace(spec, snr_grid_db=args.snr_grid_db)
    if args.sinr_grid_db is not None:
        spec = replace(spec, sinr_grid_db=args.sinr_grid_db)
    if args.alpha_grid is not None:
        spec = replace(spec, alpha_grid=args.alpha_grid)

    try:
        header, rows, summary = run_experiment(cfg, spec)
    except (ValueError, RuntimeError) as exc:
        print(f"risce: error: {exc}", file=sys.stderr)
        return 1
    if not args.no_plot:
        from .plots import figure_path, render_rows

        png = render_rows(kind, header, rows, figure_path(spec.out))
        summary += f" (+ {png})"
    print(summary)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
