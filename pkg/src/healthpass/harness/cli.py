"""``healthpass-harness``: run scenarios, the full matrix, or the benchmark."""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from healthpass.harness.benchmark import benchmark
from healthpass.harness.scenarios import (
    SCENARIOS,
    Attempt,
    HarnessConfig,
    RunReport,
    requirement_coverage,
    run_scenario,
)


def _line(report: RunReport) -> str:
    status = "PASS" if report.passed else "FAIL"
    bad = [f"{a.label}: expected {'|'.join(a.expected)}, got {a.observed}"
           for a in report.attempts if not a.ok]
    text = (f"{status} {report.scenario} seed={report.seed} attempts={len(report.attempts)} "
            f"accepted={report.accepted} time={report.wall_time:.2f}s")
    return "\n    ".join([text, *bad])


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="healthpass-harness")
    parser.add_argument("--json", action="store_true")
    parser.add_argument("--transport", choices=("http", "inprocess"), default="http")
    parser.add_argument("--rounds", type=int, default=1, help="repetitions of each attack strategy")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("run")
    p.add_argument("--scenario", required=True, choices=sorted(SCENARIOS))
    p.add_argument("--seed", type=int, default=1)
    p = sub.add_parser("all")
    p.add_argument("--seeds", type=int, default=1, help="seeds 1..N per scenario")
    p = sub.add_parser("bench")
    p.add_argument("--verifications", type=int, default=50)
    p.add_argument("--per-worker", type=int, default=20)
    args = parser.parse_args(argv)
    config = HarnessConfig(transport=args.transport, rounds=args.rounds)

    if args.cmd == "bench":
        result = benchmark(args.verifications, per_worker=args.per_worker)
        print(json.dumps(result, indent=None if args.json else 2, sort_keys=True, default=str))
        return 0

    try:
        coverage = requirement_coverage()
    except Exception as exc:
        print(f"coverage check failed: {exc}", file=sys.stderr)
        return 1

    if args.cmd == "run":
        jobs = [(args.scenario, args.seed)]
    else:
        jobs = [(name, seed) for name in SCENARIOS for seed in range(1, args.seeds + 1)]

    failed = 0
    reports = []
    for name, seed in jobs:
        report = run_scenario(name, seed, config)
        if args.cmd == "all" and seed == 1:
            # reproducibility is part of the contract
            if run_scenario(name, seed, config).content_hash() != report.content_hash():
                report.attempts.append(_irreproducible())
        failed += not report.passed
        reports.append(report)
        if args.json:
            print(json.dumps(report.to_json(), sort_keys=True))
        else:
            print(_line(report))
    if args.cmd == "all" and not args.json:
        for req, names in coverage.items():
            print(f"  {req}: {', '.join(names)}")
    return 1 if failed else 0


def _irreproducible() -> Attempt:
    return Attempt("reproducible", ("same_hash",), "different_hash")


if __name__ == "__main__":
    sys.exit(main())
