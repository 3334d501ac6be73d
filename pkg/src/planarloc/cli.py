"""Command line front end: simulate scenes, solve problem files, run benches.

Exit codes: 0 on success, 1 when an estimator cannot produce a pose, 2 for
usage or file errors. Benchmarks print one summary line per sweep cell and
method after the CSV is written; the summaries are computed by reading the
CSV back, so what is printed is exactly what was stored.
"""

from __future__ import annotations

import argparse
import math
import sys
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import LocalizationError, ParseError, SchemaVersionMismatch
from .experiments import (
    ExperimentKind,
    ExperimentPlan,
    METHODS,
    ROBUSTNESS_SUCCESS,
    USABLE_STATUSES,
    run,
)
from .metrics import pose_error
from .problem_io import read_problem, read_records, write_problem
from .ransac import SolveStatus
from .synthetic import WorldConfig, generate

_KINDS = {
    "accuracy": ExperimentKind.ACCURACY,
    "robustness": ExperimentKind.ROBUSTNESS,
    "timing": ExperimentKind.TIMING,
}


def _methods_arg(text: str) -> tuple[str, ...]:
    names = tuple(m.strip() for m in text.split(",") if m.strip())
    for m in names:
        if m not in METHODS:
            raise argparse.ArgumentTypeError(
                f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    if not names:
        raise argparse.ArgumentTypeError("empty method list")
    return names


def _sweep_arg(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not values:
        raise argparse.ArgumentTypeError("empty sweep")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planarloc",
        description="Planar-motion visual localization benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write synthetic problem files")
    sim.add_argument("--out", type=Path, default=Path("scenes"))
    sim.add_argument("--count", type=int, default=1)
    sim.add_argument("--matches", type=int, default=50,
                     help="total correspondences across all references")
    sim.add_argument("--refs", type=int, default=5)
    sim.add_argument("--sigma", type=float, default=0.0)
    sim.add_argument("--outliers", type=float, default=0.0)
    sim.add_argument("--seed", type=int, default=0)

    sol = sub.add_parser("solve", help="localize one problem file")
    sol.add_argument("path", type=Path)
    sol.add_argument("--method", choices=sorted(METHODS), default="2p1p")
    sol.add_argument("--seed", type=int, default=None,
                     help="override the estimator draw seed")

    ben = sub.add_parser("bench", help="run a benchmark sweep")
    ben.add_argument("kind", choices=sorted(_KINDS))
    ben.add_argument("--methods", type=_methods_arg,
                     default=("2p2p", "2p1p", "8p8p"))
    ben.add_argument("--sweep", type=_sweep_arg, default=(),
                     help="comma separated sweep values; empty uses the protocol default")
    ben.add_argument("--trials", type=int, default=100)
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--out", type=Path, default=Path("results"))

    plo = sub.add_parser("plot", help="regenerate charts from a results CSV")
    plo.add_argument("csv", type=Path)
    plo.add_argument("--kind", choices=sorted(_KINDS), default=None,
                     help="inferred from the filename when omitted")
    plo.add_argument("--out", type=Path, default=None,
                     help="chart directory; defaults next to the CSV")
    return parser


def _cmd_simulate(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        cfg = WorldConfig(
            n_matches=args.matches, noise_sigma_px=args.sigma,
            outlier_rate=args.outliers, n_references=args.refs,
            seed=args.seed + i,
        )
        scene = generate(cfg)
        path = args.out / f"scene_{i:03d}.json"
        write_problem(path, scene.problem, scene.ground_truth, scene.outlier_mask)
        print(path)
    return 0


def _print_pose(pose) -> None:
    with np.printoptions(precision=6, suppress=True):
        print("rotation:")
        for row in pose.rotation:
            print(f"  {row}")
        print(f"translation: {pose.translation}")


def _cmd_solve(args) -> int:
    loaded = read_problem(args.path)
    problem = loaded.problem
    if args.seed is not None:
        problem = replace(problem, rng_seed=args.seed)
    result = METHODS[args.method](problem)
    print(f"method: {args.method}")
    print(f"status: {result.status.value}")
    _print_pose(result.pose)
    print(f"inliers: {result.inlier_count} / "
          f"{sum(len(r.correspondences) for r in problem.references)}")
    c = result.checks_passed
    print("checks passed: "
          f"cheirality={c.cheirality} rcheck={c.rcheck} "
          f"triangulated={c.triangulated} pdcheck={c.pdcheck} "
          f"consistency={c.consistency}")
    if loaded.ground_truth is not None:
        err = pose_error(result.pose, loaded.ground_truth)
        print(f"rotation error [deg]: {err.rotation_deg:.6g}")
        print(f"translation error [m]: {err.translation_m:.6g}")
        print(f"direction error [deg]: {err.direction_deg:.6g}")
    return 0 if result.status != SolveStatus.NO_VALID_SAMPLE else 1


def _usable_row(r) -> bool:
    return r.status in USABLE_STATUSES and not math.isnan(r.rotation_err_deg)


def _summarize(kind: ExperimentKind, csv_path: Path) -> None:
    records = read_records(csv_path)
    x_field = {
        ExperimentKind.ACCURACY: "noise_sigma_px",
        ExperimentKind.ROBUSTNESS: "outlier_rate",
        ExperimentKind.TIMING: "n_matches",
    }[kind]
    cells = defaultdict(list)
    for r in records:
        cells[(r.n_matches, getattr(r, x_field), r.method)].append(r)
    for (nm, x, method) in sorted(cells):
        rows = cells[(nm, x, method)]
        good = [r for r in rows if _usable_row(r)]
        excl = len(rows) - len(good)
        if kind is ExperimentKind.TIMING:
            mean_ms = sum(r.wall_time_us for r in rows) / len(rows) / 1000.0
            print(f"n={nm:<4d} {method}: mean {mean_ms:.2f} ms over {len(rows)} solves")
            continue
        head = f"n={nm:<4d} {x_field}={x:<6g} {method}:"
        if kind is ExperimentKind.ROBUSTNESS:
            hits = sum(
                1 for r in good
                if r.translation_err_m < ROBUSTNESS_SUCCESS.max_translation_m
                and r.rotation_err_deg < ROBUSTNESS_SUCCESS.max_rotation_deg)
            print(f"{head} success {hits / len(rows):.2f} ({hits}/{len(rows)})")
        elif good:
            rot = sum(r.rotation_err_deg for r in good) / len(good)
            trans = sum(r.translation_err_m for r in good) / len(good)
            dire = sum(r.direction_err_deg for r in good) / len(good)
            print(f"{head} rot {rot:.4g} deg, trans {trans:.4g} m, "
                  f"dir {dire:.4g} deg ({excl} excluded)")
        else:
            print(f"{head} no usable trials ({excl} excluded)")


def _cmd_bench(args) -> int:
    plan = ExperimentPlan(
        kind=_KINDS[args.kind], methods=args.methods, sweep=args.sweep,
        trials_per_cell=args.trials, seed=args.seed, output_dir=args.out,
    )
    csv_path = run(plan)
    _summarize(plan.kind, csv_path)
    print(f"results: {csv_path}")
    print(f"charts: {plan.output_dir}")
    return 0


def _cmd_plot(args) -> int:
    from .plots import charts_for

    kind = args.kind
    if kind is None:
        stem = args.csv.stem.lower()
        for name in _KINDS:
            if name in stem:
                kind = name
                break
        else:
            print(f"error: cannot infer chart kind from {args.csv.name!r}; "
                  "pass --kind", file=sys.stderr)
            return 2
    out_dir = args.out if args.out is not None else args.csv.parent
    for path in charts_for(kind, args.csv, out_dir):
        print(path)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "solve": _cmd_solve,
        "bench": _cmd_bench,
        "plot": _cmd_plot,
    }
    try:
        return handlers[args.command](args)
    except (ParseError, SchemaVersionMismatch, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LocalizationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
