"""Command line entry point: ``tailwalk <subcommand> --config f.json --out dir``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import TailwalkError
from .harness import COMMANDS, ExperimentConfig, run_experiment


def build_parser():
    parser = argparse.ArgumentParser(prog="tailwalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--replications", type=int)
        p.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config, command=args.command, out=args.out,
                                    seed=args.seed, replications=args.replications,
                                    workers=args.workers)
        report = run_experiment(cfg)
    except TailwalkError as exc:
        print(f"tailwalk {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest.json").write_text(json.dumps(
            {"command": args.command, "error": type(exc).__name__, "message": str(exc),
             "exit_code": exc.exit_code}, indent=2) + "\n")
        return exc.exit_code
    for key, value in report.estimates.items():
        print(f"{key}: {value}")
    d = report.diagnostics
    print(f"guard_hits: {d['guard_hits']}  violations: {d['violations']}  exit: {report.exit_code}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
