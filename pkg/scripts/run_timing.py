#!/usr/bin/env python3
"""Timing benchmark: mean wall time per solve vs total match count.

Counts 10 to 500 at 5 px noise and 10% outliers, five reference views.
Each cell warms up once per method before the timed trials.
"""

import argparse
from pathlib import Path

from planarloc import ExperimentKind, ExperimentPlan, run_timing


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/timing"))
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    plan = ExperimentPlan(
        kind=ExperimentKind.TIMING,
        trials_per_cell=args.trials,
        seed=args.seed,
        output_dir=args.out,
    )
    csv_path = run_timing(plan)
    print(csv_path)


if __name__ == "__main__":
    main()
