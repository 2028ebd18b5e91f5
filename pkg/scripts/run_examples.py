#!/usr/bin/env python3
"""Run every built-in example and print one status line each."""
import argparse
import sys
import time

from qcanon.cli import EXAMPLES, run_scenario


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=6)
    args = ap.parse_args(argv)
    bad = 0
    for eid in EXAMPLES:
        t0 = time.perf_counter()
        rep = run_scenario({"K": args.k, "tasks": [{"id": eid, "type": "example", "example": eid}]})
        task = rep["tasks"][0]
        misses = [k for k, ok in task.get("checks", {}).items() if not ok]
        bad += task["status"] in ("fail", "error")
        print(f"{eid:18s} {task['status']:6s} {time.perf_counter() - t0:6.2f}s  {' '.join(misses)}{task.get('error', '')}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
