"""Command-line entry point.

    zlap <command> --graph FILE [--directed] [--params JSON|FILE] [--out FILE] [--format json|csv]
    zlap <command> --scenario FILE [--out FILE] [--format json|csv]

Exit status is 0 on success, 1 for bad input and 2 for numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from zlap.errors import ConvergenceError, InputError
from zlap.io import COMMANDS, Scenario, emit_report, load_scenario, run_scenario


def _load_params(text: str | None) -> dict:
    if text is None:
        return {}
    path = Path(text)
    if not text.lstrip().startswith("{") and path.is_file():
        text = path.read_text()
    try:
        params = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"--params is not valid JSON: {exc}") from None
    if not isinstance(params, dict):
        raise InputError("--params must be a JSON object")
    return params


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zlap", description="Z-Laplacian graph dynamics toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} command")
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--graph", help="edge-list file")
        src.add_argument("--scenario", help="scenario JSON file (graph path relative to it)")
        p.add_argument("--directed", action="store_true", help="treat a headerless edge list as directed")
        p.add_argument("--params", help="JSON object, or path to a JSON file, of command parameters")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.scenario:
            if args.params is not None:
                raise InputError("--params cannot be combined with --scenario")
            scenario = load_scenario(args.scenario)
            if scenario.command != args.command:
                raise InputError(f"scenario runs {scenario.command!r}, not {args.command!r}")
        else:
            scenario = Scenario(args.graph, args.command, args.directed, _load_params(args.params))
        text = emit_report(run_scenario(scenario), args.format)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    except ConvergenceError as exc:
        print(f"zlap: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (InputError, OSError) as exc:
        print(f"zlap: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
