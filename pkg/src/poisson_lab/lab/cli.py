"""Command line: ``poisson-lab run|validate|list-scenarios``.

Exit status: 0 when every check passes, 1 when a check fails, 2 for unusable
input (schema or syntax errors, missing files), 3 when the time budget cut the
run short.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import yaml

from .runner import EXIT_OK, EXIT_USAGE, run_scenario
from .scenario import ScenarioError, builtin_scenarios, load_scenario, resolve


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="poisson-lab", description="Entropy experiments on Markov shifts "
                                 "and their Poisson suspensions.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario file or built-in scenario")
    run.add_argument("config", help="path to a YAML scenario, or a built-in scenario name")
    run.add_argument("--seed", type=int, default=None, help="override the scenario root seed")
    run.add_argument("--out-dir", default=None, help="write report.json, metadata.json and CSVs here")
    run.add_argument("--budget-seconds", type=float, default=None,
                     help="skip remaining experiments once this much time has passed")
    val = sub.add_parser("validate", help="check a scenario against the schema")
    val.add_argument("config")
    sub.add_parser("list-scenarios", help="list built-in scenarios")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name, path in builtin_scenarios().items():
            doc = yaml.safe_load(path.read_text()) or {}
            kinds = ", ".join(e["kind"] for e in doc.get("experiments", [])) or "no experiments"
            print(f"{name:28s} {kinds}")
        return EXIT_OK
    try:
        path = resolve(args.config)
        if args.command == "validate":
            sc = load_scenario(path)
            print(f"{path}: ok ({len(sc.experiments)} experiment(s))")
            return EXIT_OK
        report = run_scenario(path, args.seed, args.out_dir, args.budget_seconds)
    except ScenarioError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.experiment}: {c.name}  computed={c.computed} "
              f"reference={c.reference}")
    if report.incomplete:
        print(f"INCOMPLETE: budget exhausted, skipped {', '.join(report.skipped)}")
    n_fail = sum(not c.passed for c in report.checks)
    print(f"{len(report.checks) - n_fail}/{len(report.checks)} checks passed")
    return report.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
