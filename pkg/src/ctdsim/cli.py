"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 I/O error, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .formats import events_from_csv, labels_to_csv
from .harness import (InvariantViolation, oracle_check, registry_dump, run_case_study,
                      run_experiment)
from .mobility import ConfigError
from .tracing import TemporalContactGraph, propagate_risk

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INVARIANT = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctdsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the configured days and write all reports")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--log", choices=["auto", "all", "recorded"], default="auto",
                   help="which pair checks go to events.csv")

    p = sub.add_parser("trace", help="label risk from an event log")
    p.add_argument("--events", required=True)
    p.add_argument("--seeds", required=True, help="comma-separated infected IDs")
    p.add_argument("--out", help="labels CSV (default: stdout)")

    p = sub.add_parser("case-study", help="Day-1 then Day-2 under each quarantine policy")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--sweep", type=int, default=0, help="also repeat over this many seeds")

    p = sub.add_parser("registry-dump", help="write the registry snapshot after the run")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="snapshot CSV path")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("oracle-check", help="differential test of the tracing engine")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    config = getattr(args, "config", None)
    try:
        if args.command == "simulate":
            report = run_experiment(args.config, args.out, args.seed, args.log)
            print(f"scenario {report.scenario_hash[:12]}: "
                  + ", ".join(f"day {d['day']} {d['recorded']} recorded" for d in report.days))
        elif args.command == "trace":
            try:
                events = events_from_csv(Path(args.events).read_text(encoding="utf-8"))
            except ValueError as exc:
                raise ConfigError(f"{args.events}: {exc}") from None
            seeds = [s.strip() for s in args.seeds.split(",") if s.strip()]
            try:
                labels = propagate_risk(TemporalContactGraph.from_events(events), seeds)
            except ValueError as exc:
                raise ConfigError(f"bad seed ID: {exc}") from None
            text = labels_to_csv(labels)
            if args.out:
                Path(args.out).write_text(text, encoding="utf-8", newline="")
            else:
                sys.stdout.write(text)
        elif args.command == "case-study":
            report = run_case_study(args.config, args.out, args.seed, args.sweep)
            for row in report.policies:
                print(row)
        elif args.command == "registry-dump":
            registry_dump(args.config, args.out, args.seed)
        elif args.command == "oracle-check":
            bad = oracle_check(args.instances, args.seed)
            print(f"{args.instances - len(bad)}/{args.instances} instances agree")
            if bad:
                raise InvariantViolation(f"oracle mismatch on instances {bad[:10]}")
    except ConfigError as exc:
        where = f"{config}:{exc.line}" if exc.line else (config or "input")
        print(f"{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
