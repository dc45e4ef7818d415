"""Command-line experiment runner.

``flowlb run --config cfg.json --out results/`` executes a sweep campaign;
``flowlb gen --config cfg.json --out trace.csv`` writes a synthetic trace.
Exit codes: 0 success, 1 config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import ExperimentSpec, load_spec, make_trace, run_experiment
from .traffic import save_trace

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowlb")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a sweep campaign from a JSON config")
    run_p.add_argument("--config", required=True, help="path to JSON config")
    run_p.add_argument("--out", required=True, help="output directory for CSVs")
    run_p.add_argument("--seed", type=int, default=None, help="override base seed")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
    run_p.add_argument("--quiet", action="store_true")

    gen_p = sub.add_parser("gen", help="generate a synthetic trace CSV")
    gen_p.add_argument("--config", required=True, help="path to JSON config")
    gen_p.add_argument("--out", required=True, help="output trace CSV path")
    gen_p.add_argument("--seed", type=int, default=None, help="override base seed")
    gen_p.add_argument("--quiet", action="store_true")
    return parser


def cmd_run(args) -> int:
    try:
        spec = load_spec(args.config, seed_override=args.seed)
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"flowlb: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        run_experiment(spec, args.out, jobs=max(args.jobs, 1), quiet=args.quiet)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"flowlb: run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        spec = load_spec(args.config, seed_override=args.seed)
        trace = make_trace(spec, spec.base_seed)
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"flowlb: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        save_trace(trace, args.out)
    except OSError as exc:
        print(f"flowlb: write failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if not args.quiet:
        print(f"wrote {len(trace)} flows to {args.out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_gen(args)


if __name__ == "__main__":
    sys.exit(main())
