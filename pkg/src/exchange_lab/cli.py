"""Command line: ``exchange-lab run <config> [--out DIR] [--format json-lines|csv] [--quiet]``.

Exit status: 0 when every configured expectation passes, 1 when some
expectation fails, 2 for configuration, physics or output errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments.config import ConfigError, load_config
from .experiments.runner import (FORMATS, EmitError, ScenarioError, check_writable, emit_results,
                                 format_json_lines, output_path, run_scenario)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exchange-lab", description="Run exchange-phase scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scenario config file")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=Path("results"), help="output directory (default: results)")
    run.add_argument("--format", choices=list(FORMATS), default="json-lines")
    run.add_argument("--quiet", action="store_true", help="suppress the per-record summary")
    run.add_argument("--timing", action="store_true", help="include wall times in the output")
    return parser


def _summary(rec) -> str:
    status = "PASS" if rec.passed else "FAIL"
    failed = [k for k, ok in rec.checks.items() if not ok]
    tail = f"  failed: {', '.join(failed)}" if failed else ""
    return f"[{status}] {rec.scenario_id} #{rec.sweep_index} ({rec.wall_time:.2f} s){tail}"


def cmd_run(args) -> int:
    try:
        config, base = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(exc, file=sys.stderr)
        return 2
    target = output_path(args.out, config.stem, args.format)
    try:
        check_writable(target)
        records = run_scenario(config, base)
    except (EmitError, ScenarioError) as exc:
        print(exc, file=sys.stderr)
        return 2
    try:
        emit_results(records, target, args.format, args.timing)
    except EmitError as exc:
        print(exc, file=sys.stderr)
        sys.stdout.write(format_json_lines(records, args.timing))
        return 2
    if not args.quiet:
        for rec in records:
            print(_summary(rec))
        print(f"wrote {len(records)} record(s) to {target}")
    return 0 if all(r.passed for r in records) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return 2  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
