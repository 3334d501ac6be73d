#!/usr/bin/env python3
"""Noise sweep benchmark: mean pose errors vs pixel noise at zero outliers.

Full protocol: sigmas 0..10 px, total match counts 100/50/10 over five
reference views, 100 trials per cell. Expect roughly an hour single core;
pass --trials 10 for a quick look.
"""

import argparse
from pathlib import Path

from planarloc import ExperimentKind, ExperimentPlan, run_accuracy


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/accuracy"))
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    plan = ExperimentPlan(
        kind=ExperimentKind.ACCURACY,
        trials_per_cell=args.trials,
        seed=args.seed,
        output_dir=args.out,
    )
    csv_path = run_accuracy(plan)
    print(csv_path)


if __name__ == "__main__":
    main()
