"""Command-line driver: ``chenricci --scenario warped-s3 --theorems t31,t41``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ChenRicciError
from .report import EXIT_CONFIG, FORMATS, POLICIES, THEOREMS, RunConfig, RunError, dumps_json, emit, run
from .scenarios import BUILTINS, dump_scenario, resolve


def _theorem_list(text: str) -> tuple[str, ...]:
    items = tuple(t.strip() for t in text.split(",") if t.strip())
    if not items:
        raise argparse.ArgumentTypeError("empty theorem list")
    return items


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chenricci", description="Verify Chen–Ricci inequalities at sampled points.")
    p.add_argument("--scenario", help="builtin name, e.g. warped-s3 or sphere-stereographic(3,1), or a scenario file")
    p.add_argument("--theorems", type=_theorem_list, default=("all",), help=f"comma list from {', '.join(THEOREMS)} or 'all'")
    p.add_argument("--samples", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol-slack", type=float, default=1e-6)
    p.add_argument("--tol-identity", type=float, default=1e-5)
    p.add_argument("--tol-equality", type=float, default=1e-8)
    p.add_argument("--convention", choices=POLICIES, default="auto")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--hineva-trials", type=int, default=10_000)
    p.add_argument("--list-scenarios", action="store_true", help="print builtin scenario names and exit")
    p.add_argument("--dump-scenario", metavar="NAME", help="print a builtin scenario in file format and exit")
    return p


def _error(payload: dict) -> int:
    sys.stderr.write(dumps_json(payload) + "\n")
    return EXIT_CONFIG


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return EXIT_CONFIG if exc.code else 0
    if args.list_scenarios:
        sys.stdout.write("\n".join(BUILTINS) + "\n")
        return 0
    try:
        if args.dump_scenario:
            sys.stdout.write(dump_scenario(resolve(args.dump_scenario)))
            return 0
        if args.scenario is None and args.theorems != ("hineva-fuzz",):
            return _error({"error": "ConfigError", "message": "--scenario is required"})
        config = RunConfig(
            scenario=args.scenario,
            theorems=args.theorems,
            samples=args.samples,
            seed=args.seed,
            tol_slack=args.tol_slack,
            tol_identity=args.tol_identity,
            tol_equality=args.tol_equality,
            convention=args.convention,
            format=args.format,
            out=args.out,
            hineva_trials=args.hineva_trials,
        )
        report = run(config)
    except RunError as err:
        return _error(err.record())
    except ChenRicciError as err:
        return _error({"error": type(err).__name__, "message": str(err)})
    data = emit(report, config.format)
    try:
        if config.out:
            Path(config.out).write_bytes(data)
        else:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
    except OSError as err:
        return _error({"error": "OSError", "message": str(err)})
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
