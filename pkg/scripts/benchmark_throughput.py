#!/usr/bin/env python3
"""Measure single-core record construction rates per task and depth."""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from traceforge import pipeline  # noqa: E402

COUNTS = {"countdown": 500, "sudoku": 60, "arc1d": 500}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--scale", type=float, default=1.0,
                        help="multiply per-task record counts")
    args = parser.parse_args()

    print(f"{'task':<10} {'k':>3} {'records':>8} {'seconds':>8} {'rec/s':>8}")
    for task in pipeline.TRACED_TASKS:
        count = max(1, int(COUNTS[task.value] * args.scale))
        for k in (0, 1, 5, 10):
            start = time.perf_counter()
            lines = pipeline.build_records(task, count, args.seed, k, workers=1)
            elapsed = time.perf_counter() - start
            print(f"{task.value:<10} {k:>3} {len(lines):>8} "
                  f"{elapsed:>8.2f} {len(lines) / elapsed:>8.0f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
