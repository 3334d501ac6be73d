#!/usr/bin/env python3
"""Outlier sweep benchmark: success rate vs outlier rate at fixed noise.

Full protocol: rates 0 to 0.6, total match counts 100/50/20 over five
reference views, 1000 estimator iterations, 100 trials per cell. A trial
succeeds within 0.1 m and 1 degree of the true pose.
"""

import argparse
from pathlib import Path

from planarloc import ExperimentKind, ExperimentPlan, run_robustness


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/robustness"))
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    plan = ExperimentPlan(
        kind=ExperimentKind.ROBUSTNESS,
        trials_per_cell=args.trials,
        seed=args.seed,
        output_dir=args.out,
    )
    csv_path = run_robustness(plan)
    print(csv_path)


if __name__ == "__main__":
    main()
