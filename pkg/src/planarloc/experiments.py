"""Benchmark protocols: seeded scene sweeps, timed solves, CSV output.

Every trial seed derives from (plan seed, cell index, trial index), so runs
with the same plan reproduce the same scenes and estimator draws regardless
of which methods are enabled or in what order cells execute. Trials run
sequentially; records land in a CSV that the charts and summaries are
rebuilt from, never from in-memory state.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .baseline import estimate_8p8p
from .errors import LocalizationError
from .metrics import SuccessCriterion, pose_error
from .problem_io import TrialRecord, write_records
from .ransac import (
    LocalizationProblem,
    SolveStatus,
    estimate_2p1p,
    estimate_2p2p,
)
from .synthetic import WorldConfig, corrupt, generate

METHODS = {
    "2p2p": estimate_2p2p,
    "2p1p": estimate_2p1p,
    "8p8p": estimate_8p8p,
}

# match counts are totals across all reference views
ACCURACY_MATCH_COUNTS = (100, 50, 10)
ROBUSTNESS_MATCH_COUNTS = (100, 50, 20)
TIMING_MATCH_COUNTS = (10, 50, 100, 200, 500)

DEFAULT_NOISE_SWEEP = tuple(float(s) for s in range(11))
DEFAULT_OUTLIER_SWEEP = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6)

EXPERIMENT_REFERENCES = 5
ROBUSTNESS_NOISE_SIGMA_PX = 0.65
ROBUSTNESS_ITERATIONS = 1000
TIMING_NOISE_SIGMA_PX = 5.0
TIMING_OUTLIER_RATE = 0.1

# statuses whose pose is a real estimate; anything else is excluded from means
USABLE_STATUSES = frozenset(
    {SolveStatus.SUCCESS.value, SolveStatus.REFINEMENT_WARNING.value}
)

# a robustness trial succeeds when both pose errors clear these bounds
ROBUSTNESS_SUCCESS = SuccessCriterion(max_translation_m=0.1, max_rotation_deg=1.0)


class ExperimentKind(Enum):
    ACCURACY = "Accuracy"
    ROBUSTNESS = "Robustness"
    TIMING = "Timing"
    SOLVE = "Solve"


def default_sweep(kind: ExperimentKind) -> tuple[float, ...]:
    if kind is ExperimentKind.ACCURACY:
        return DEFAULT_NOISE_SWEEP
    if kind is ExperimentKind.ROBUSTNESS:
        return DEFAULT_OUTLIER_SWEEP
    if kind is ExperimentKind.TIMING:
        return tuple(float(c) for c in TIMING_MATCH_COUNTS)
    return ()


@dataclass(frozen=True)
class ExperimentPlan:
    """What to run: methods, the swept variable, and trial budget.

    The sweep is noise sigmas for accuracy, outlier rates for robustness,
    and total match counts for timing. Match counts per cell follow the
    per-kind protocol constants; the sweep never changes them except for
    timing, where the sweep IS the match count axis.
    """

    kind: ExperimentKind
    methods: tuple[str, ...] = ("2p2p", "2p1p", "8p8p")
    sweep: tuple[float, ...] = ()
    trials_per_cell: int = 100
    seed: int = 0
    output_dir: Path = Path("results")

    def __post_init__(self):
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("methods must be nonempty")
        for m in methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        if len(set(methods)) != len(methods):
            raise ValueError("duplicate method names")
        sweep = tuple(float(v) for v in self.sweep)
        if not sweep:
            sweep = default_sweep(self.kind)
        if not sweep:
            raise ValueError("sweep must be nonempty")
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be at least 1")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "sweep", sweep)
        object.__setattr__(self, "output_dir", Path(self.output_dir))


def trial_seeds(plan_seed: int, cell_index: int, trial: int) -> tuple[int, int]:
    """(scene seed, estimator seed) for one trial, order independent."""
    ss = np.random.SeedSequence([plan_seed, cell_index, trial])
    a, b = ss.generate_state(2, np.uint64)
    return int(a), int(b)


def _run_one(method: str, problem: LocalizationProblem, truth,
             trial_id: int, sigma: float, rate: float, n_matches: int) -> TrialRecord:
    fn = METHODS[method]
    t0 = time.perf_counter()
    try:
        result = fn(problem)
    except LocalizationError as exc:
        wall = (time.perf_counter() - t0) * 1e6
        return TrialRecord(
            trial_id=trial_id, method=method, noise_sigma_px=sigma,
            outlier_rate=rate, n_matches=n_matches,
            rotation_err_deg=float("nan"), translation_err_m=float("nan"),
            direction_err_deg=float("nan"), inlier_count=0,
            status=type(exc).__name__, wall_time_us=wall,
        )
    wall = (time.perf_counter() - t0) * 1e6
    err = pose_error(result.pose, truth)
    return TrialRecord(
        trial_id=trial_id, method=method, noise_sigma_px=sigma,
        outlier_rate=rate, n_matches=n_matches,
        rotation_err_deg=err.rotation_deg, translation_err_m=err.translation_m,
        direction_err_deg=err.direction_deg, inlier_count=result.inlier_count,
        status=result.status.value, wall_time_us=wall,
    )


def _write(plan: ExperimentPlan, name: str, records) -> Path:
    plan.output_dir.mkdir(parents=True, exist_ok=True)
    out = plan.output_dir / name
    write_records(out, records)
    return out


def run_accuracy(plan: ExperimentPlan) -> Path:
    """Noise sweep at zero outliers; returns the CSV path, charts beside it.

    One scene per (sigma, match count, trial); every method solves the same
    problem so per-trial comparisons are paired.
    """
    cells = [(s, nm) for s in plan.sweep for nm in ACCURACY_MATCH_COUNTS]
    records = []
    for ci, (sigma, nm) in enumerate(cells):
        for t in range(plan.trials_per_cell):
            scene_seed, est_seed = trial_seeds(plan.seed, ci, t)
            scene = generate(WorldConfig(
                n_matches=nm, noise_sigma_px=sigma, outlier_rate=0.0,
                n_references=EXPERIMENT_REFERENCES, seed=scene_seed,
            ))
            problem = replace(scene.problem, rng_seed=est_seed)
            trial_id = ci * plan.trials_per_cell + t
            for m in plan.methods:
                records.append(_run_one(
                    m, problem, scene.ground_truth, trial_id, sigma, 0.0, nm))
    out = _write(plan, "accuracy.csv", records)
    from .plots import accuracy_charts

    accuracy_charts(out, plan.output_dir)
    return out


def run_robustness(plan: ExperimentPlan) -> Path:
    """Outlier-rate sweep at fixed noise; returns the CSV path.

    Scenes are generated clean and then corrupted to the target rate, the
    same way a degrading match pipeline would leave the inlier geometry
    intact. The estimator budget is flat so success rates reflect the
    solvers, not an adaptive stopping rule.
    """
    cells = [(r, nm) for r in plan.sweep for nm in ROBUSTNESS_MATCH_COUNTS]
    records = []
    for ci, (rate, nm) in enumerate(cells):
        for t in range(plan.trials_per_cell):
            scene_seed, est_seed = trial_seeds(plan.seed, ci, t)
            scene = generate(WorldConfig(
                n_matches=nm, noise_sigma_px=ROBUSTNESS_NOISE_SIGMA_PX,
                outlier_rate=0.0, n_references=EXPERIMENT_REFERENCES,
                seed=scene_seed,
            ))
            scene = corrupt(scene, rate)
            problem = replace(
                scene.problem, rng_seed=est_seed,
                iterations=ROBUSTNESS_ITERATIONS,
            )
            trial_id = ci * plan.trials_per_cell + t
            for m in plan.methods:
                records.append(_run_one(
                    m, problem, scene.ground_truth, trial_id,
                    ROBUSTNESS_NOISE_SIGMA_PX, rate, nm))
    out = _write(plan, "robustness.csv", records)
    from .plots import robustness_charts

    robustness_charts(out, plan.output_dir)
    return out


def run_timing(plan: ExperimentPlan) -> Path:
    """Wall time versus total match count at moderate noise and outliers.

    Each cell runs one unrecorded warmup solve per method before the timed
    trials so allocator and cache effects land outside the measurement.
    """
    counts = [int(v) for v in plan.sweep]
    records = []
    for ci, nm in enumerate(counts):
        warm_seed, warm_est = trial_seeds(plan.seed, ci, plan.trials_per_cell)
        warm = generate(WorldConfig(
            n_matches=nm, noise_sigma_px=TIMING_NOISE_SIGMA_PX,
            outlier_rate=TIMING_OUTLIER_RATE,
            n_references=EXPERIMENT_REFERENCES, seed=warm_seed,
        ))
        warm_problem = replace(warm.problem, rng_seed=warm_est)
        for m in plan.methods:
            try:
                METHODS[m](warm_problem)
            except LocalizationError:
                pass
        for t in range(plan.trials_per_cell):
            scene_seed, est_seed = trial_seeds(plan.seed, ci, t)
            scene = generate(WorldConfig(
                n_matches=nm, noise_sigma_px=TIMING_NOISE_SIGMA_PX,
                outlier_rate=TIMING_OUTLIER_RATE,
                n_references=EXPERIMENT_REFERENCES, seed=scene_seed,
            ))
            problem = replace(scene.problem, rng_seed=est_seed)
            trial_id = ci * plan.trials_per_cell + t
            for m in plan.methods:
                records.append(_run_one(
                    m, problem, scene.ground_truth, trial_id,
                    TIMING_NOISE_SIGMA_PX, TIMING_OUTLIER_RATE, nm))
    out = _write(plan, "timing.csv", records)
    from .plots import timing_chart

    timing_chart(out, plan.output_dir)
    return out


def run(plan: ExperimentPlan) -> Path:
    if plan.kind is ExperimentKind.ACCURACY:
        return run_accuracy(plan)
    if plan.kind is ExperimentKind.ROBUSTNESS:
        return run_robustness(plan)
    if plan.kind is ExperimentKind.TIMING:
        return run_timing(plan)
    raise ValueError(f"{plan.kind.value} plans are not batch experiments")
