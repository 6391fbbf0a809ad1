"""Command line front end: ``harness run <scenario|all> [--seed N] [--json]``."""

from __future__ import annotations

import argparse
import json
import sys

from trackgate.harness.scenarios import SCENARIOS, run_all, run_scenario


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="harness",
        description="Run end-to-end anti-tracking scenarios against a loopback deployment.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    run_parser = subparsers.add_parser("run", help="run one scenario, or all of them")
    run_parser.add_argument(
        "scenario",
        choices=sorted(SCENARIOS) + ["all"],
        help="scenario name, or 'all'",
    )
    run_parser.add_argument("--seed", type=int, default=0, help="RNG seed for tracker identifiers")
    run_parser.add_argument("--json", action="store_true", help="emit the JSON transcript(s)")
    args = parser.parse_args(argv)

    results = (
        run_all(args.seed) if args.scenario == "all" else [run_scenario(args.scenario, args.seed)]
    )

    if args.json:
        print(json.dumps([result.transcript for result in results], indent=2))
    else:
        for result in results:
            verdict = result.verdict
            print(
                f"{result.name}: {'PASS' if result.passed else 'FAIL'} "
                f"(user_recognized={verdict.user_recognized}, "
                f"website_identified={verdict.website_identified}, "
                f"tracking_possible={verdict.tracking_possible})"
            )
            for assertion in result.assertions:
                marker = "ok" if assertion.passed else "FAILED"
                detail = f" [{assertion.detail}]" if assertion.detail and not assertion.passed else ""
                print(f"  - {assertion.name}: {marker}{detail}")

    if not all(result.passed for result in results):
        if not args.json:  # dump evidence for the failing runs
            failing = [result.transcript for result in results if not result.passed]
            print(json.dumps(failing, indent=2), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
