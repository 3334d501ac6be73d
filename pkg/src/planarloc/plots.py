"""Charts rebuilt from result CSVs alone.

Nothing here touches estimators or scenes: every figure is a pure function
of one CSV file, so archived results can be re-plotted without rerunning a
single trial. matplotlib loads lazily and only the SVG backend is used.
"""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

from .experiments import ROBUSTNESS_SUCCESS, USABLE_STATUSES
from .problem_io import TrialRecord, read_records

_STYLE = {
    "2p2p": ("tab:blue", "o"),
    "2p1p": ("tab:orange", "s"),
    "8p8p": ("tab:green", "^"),
}

_ERROR_FIELDS = (
    ("rotation_err_deg", "rotation error [deg]", "rotation"),
    ("translation_err_m", "translation error [m]", "translation"),
    ("direction_err_deg", "direction error [deg]", "direction"),
)


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "planarloc"
    return plt


def _style(method: str):
    return _STYLE.get(method, ("tab:gray", "x"))


def _usable(r: TrialRecord) -> bool:
    return r.status in USABLE_STATUSES and not math.isnan(r.rotation_err_deg)


def _group(records, x_field: str):
    """(n_matches, method) -> sorted x values -> records at that x."""
    cells = defaultdict(lambda: defaultdict(list))
    for r in records:
        cells[(r.n_matches, r.method)][getattr(r, x_field)].append(r)
    return cells


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values) if values else float("nan")


def _save(fig, out_dir: Path, name: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    fig.savefig(path, format="svg", metadata={"Date": None})
    return path


def accuracy_charts(csv_path, out_dir) -> list[Path]:
    """Mean error versus noise sigma: one figure per error type per count.

    Trials whose status is not a usable pose are left out of the means;
    the drop is reported in the legend so a clean-looking curve cannot
    hide a method that rarely returns an answer.
    """
    plt = _pyplot()
    records = read_records(csv_path)
    out_dir = Path(out_dir)
    cells = _group(records, "noise_sigma_px")
    counts = sorted({nm for nm, _ in cells}, reverse=True)
    methods = sorted({m for _, m in cells})
    written = []
    for field, ylabel, tag in _ERROR_FIELDS:
        for nm in counts:
            fig, ax = plt.subplots(figsize=(5.0, 3.4))
            for method in methods:
                by_x = cells.get((nm, method))
                if not by_x:
                    continue
                xs = sorted(by_x)
                ys, dropped, total = [], 0, 0
                for x in xs:
                    rows = by_x[x]
                    good = [getattr(r, field) for r in rows if _usable(r)]
                    ys.append(_mean(good))
                    dropped += len(rows) - len(good)
                    total += len(rows)
                color, marker = _style(method)
                label = method if not dropped else f"{method} ({dropped}/{total} excl.)"
                ax.plot(xs, ys, color=color, marker=marker, markersize=4,
                        linewidth=1.2, label=label)
            ax.set_xlabel("pixel noise sigma [px]")
            ax.set_ylabel(ylabel)
            ax.set_title(f"{nm} matches")
            ax.grid(True, alpha=0.3)
            ax.legend(fontsize=8)
            fig.tight_layout()
            written.append(_save(fig, out_dir, f"accuracy_{tag}_n{nm}.svg"))
            plt.close(fig)
    return written


def robustness_charts(csv_path, out_dir) -> list[Path]:
    """Success rate versus outlier rate, one figure per match count.

    Success is recomputed from the stored errors, so the figure reflects
    exactly what the CSV says and nothing the run kept in memory.
    """
    plt = _pyplot()
    records = read_records(csv_path)
    out_dir = Path(out_dir)
    cells = _group(records, "outlier_rate")
    counts = sorted({nm for nm, _ in cells}, reverse=True)
    methods = sorted({m for _, m in cells})
    written = []
    for nm in counts:
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for method in methods:
            by_x = cells.get((nm, method))
            if not by_x:
                continue
            xs = sorted(by_x)
            ys = []
            for x in xs:
                rows = by_x[x]
                hits = sum(
                    1 for r in rows
                    if _usable(r)
                    and r.translation_err_m < ROBUSTNESS_SUCCESS.max_translation_m
                    and r.rotation_err_deg < ROBUSTNESS_SUCCESS.max_rotation_deg
                )
                ys.append(hits / len(rows))
            color, marker = _style(method)
            ax.plot(xs, ys, color=color, marker=marker, markersize=4,
                    linewidth=1.2, label=method)
        ax.set_xlabel("outlier rate")
        ax.set_ylabel("success rate")
        ax.set_ylim(-0.02, 1.02)
        ax.set_title(f"{nm} matches")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        written.append(_save(fig, out_dir, f"robustness_n{nm}.svg"))
        plt.close(fig)
    return written


def timing_chart(csv_path, out_dir) -> list[Path]:
    """Mean wall time per solve versus total match count."""
    plt = _pyplot()
    records = read_records(csv_path)
    out_dir = Path(out_dir)
    by_method = defaultdict(lambda: defaultdict(list))
    for r in records:
        by_method[r.method][r.n_matches].append(r.wall_time_us)
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for method in sorted(by_method):
        xs = sorted(by_method[method])
        ys = [_mean(by_method[method][x]) / 1000.0 for x in xs]
        color, marker = _style(method)
        ax.plot(xs, ys, color=color, marker=marker, markersize=4,
                linewidth=1.2, label=method)
    ax.set_xlabel("total feature matches")
    ax.set_ylabel("mean solve time [ms]")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    written = [_save(fig, out_dir, "timing.svg")]
    plt.close(fig)
    return written


def charts_for(kind: str, csv_path, out_dir) -> list[Path]:
    """Dispatch by experiment kind name (case insensitive)."""
    key = kind.strip().lower()
    table = {
        "accuracy": accuracy_charts,
        "robustness": robustness_charts,
        "timing": timing_chart,
    }
    if key not in table:
        raise ValueError(f"no charts defined for kind {kind!r}")
    return table[key](csv_path, out_dir)
