"""Problem files and result CSVs.

Problem files are JSON (conventionally `.vlp.json`) with normalized-coordinate
correspondences, so a file never depends on getting the intrinsics right
twice. Floats survive a write/read cycle bit-exactly (shortest-repr JSON
serialization). Result CSVs have a fixed column order with one row per trial.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .absolute_pose import ReferenceView
from .errors import ParseError, SchemaVersionMismatch
from .geometry import CameraIntrinsics, Correspondence, RigidPose
from .ransac import LocalizationProblem

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "trial_id",
    "method",
    "noise_sigma_px",
    "outlier_rate",
    "n_matches",
    "rotation_err_deg",
    "translation_err_m",
    "direction_err_deg",
    "inlier_count",
    "status",
    "wall_time_us",
)


@dataclass(frozen=True)
class LoadedProblem:
    """A problem read from disk plus whatever annotations the file carried."""

    problem: LocalizationProblem
    ground_truth: RigidPose | None
    outlier_mask: tuple[tuple[bool, ...], ...] | None


def _pose_to_dict(pose: RigidPose) -> dict:
    return {
        "rotation": [float(v) for v in pose.rotation.reshape(9)],
        "translation": [float(v) for v in pose.translation],
    }


def _pose_from_dict(obj, where: str) -> RigidPose:
    rot = _expect(obj, "rotation", list, where)
    tr = _expect(obj, "translation", list, where)
    if len(rot) != 9:
        raise ParseError(f"{where}.rotation: expected 9 row-major floats, got {len(rot)}")
    if len(tr) != 3:
        raise ParseError(f"{where}.translation: expected 3 floats, got {len(tr)}")
    try:
        return RigidPose(np.array(rot, dtype=np.float64).reshape(3, 3),
                         np.array(tr, dtype=np.float64))
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc


def _expect(obj, key, kind, where):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in obj:
        raise ParseError(f"{where}.{key}: missing")
    val = obj[key]
    if kind is float:
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ParseError(f"{where}.{key}: expected a number")
        return float(val)
    if not isinstance(val, kind):
        raise ParseError(f"{where}.{key}: expected {kind.__name__}")
    return val


def write_problem(path, problem: LocalizationProblem, ground_truth: RigidPose | None = None,
                  outlier_mask=None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "intrinsics": {
            "fx": problem.intrinsics.fx,
            "fy": problem.intrinsics.fy,
            "cx": problem.intrinsics.cx,
            "cy": problem.intrinsics.cy,
        },
        "references": [
            {
                **_pose_to_dict(ref.pose),
                "correspondences": [
                    {
                        "qx": c.query_point[0],
                        "qy": c.query_point[1],
                        "rx": c.reference_point[0],
                        "ry": c.reference_point[1],
                    }
                    for c in ref.correspondences
                ],
            }
            for ref in problem.references
        ],
    }
    if ground_truth is not None:
        doc["ground_truth"] = _pose_to_dict(ground_truth)
    if outlier_mask is not None:
        doc["outlier_mask"] = [[bool(b) for b in ref_mask] for ref_mask in outlier_mask]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_problem(path) -> LoadedProblem:
    """Parse a problem file; InvalidProblem propagates for structural violations."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc

    version = _expect(doc, "schema_version", int, "document")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"schema_version {version}, expected {SCHEMA_VERSION}")

    intr_obj = _expect(doc, "intrinsics", dict, "document")
    intr = CameraIntrinsics(
        _expect(intr_obj, "fx", float, "intrinsics"),
        _expect(intr_obj, "fy", float, "intrinsics"),
        _expect(intr_obj, "cx", float, "intrinsics"),
        _expect(intr_obj, "cy", float, "intrinsics"),
    )

    refs_obj = _expect(doc, "references", list, "document")
    references = []
    for j, ref_obj in enumerate(refs_obj):
        where = f"references[{j}]"
        pose = _pose_from_dict(ref_obj, where)
        corr_objs = _expect(ref_obj, "correspondences", list, where)
        corrs = []
        for k, c in enumerate(corr_objs):
            cw = f"{where}.correspondences[{k}]"
            corrs.append(
                Correspondence(
                    (_expect(c, "qx", float, cw), _expect(c, "qy", float, cw)),
                    (_expect(c, "rx", float, cw), _expect(c, "ry", float, cw)),
                    j,
                )
            )
        references.append(ReferenceView(pose, tuple(corrs)))

    problem = LocalizationProblem(intr, tuple(references))

    gt = None
    if "ground_truth" in doc:
        gt = _pose_from_dict(doc["ground_truth"], "ground_truth")
    mask = None
    if "outlier_mask" in doc:
        raw = _expect(doc, "outlier_mask", list, "document")
        if len(raw) != len(references):
            raise ParseError("outlier_mask: one list per reference required")
        mask = tuple(tuple(bool(b) for b in ref_mask) for ref_mask in raw)
        for j, (ref_mask, ref) in enumerate(zip(mask, references)):
            if len(ref_mask) != len(ref.correspondences):
                raise ParseError(f"outlier_mask[{j}]: length mismatch")
    return LoadedProblem(problem, gt, mask)


@dataclass(frozen=True)
class TrialRecord:
    """One estimator invocation, as written to the results CSV."""

    trial_id: int
    method: str
    noise_sigma_px: float
    outlier_rate: float
    n_matches: int
    rotation_err_deg: float
    translation_err_m: float
    direction_err_deg: float
    inlier_count: int
    status: str
    wall_time_us: float


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_records(path, records) -> None:
    """One row per trial, fixed column order, 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# planarloc results schema {SCHEMA_VERSION};"
                 " wall_time_us is nondeterministic\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([
                r.trial_id,
                r.method,
                _fmt(r.noise_sigma_px),
                _fmt(r.outlier_rate),
                r.n_matches,
                _fmt(r.rotation_err_deg),
                _fmt(r.translation_err_m),
                _fmt(r.direction_err_deg),
                r.inlier_count,
                r.status,
                _fmt(r.wall_time_us),
            ])


def read_records(path) -> list[TrialRecord]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = [row for row in csv.reader(
                line for line in fh if not line.startswith("#"))]
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ParseError(f"{path}: missing or wrong header row")
    records = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_COLUMNS):
            raise ParseError(f"{path}: row {i} has {len(row)} fields")
        try:
            records.append(TrialRecord(
                trial_id=int(row[0]),
                method=row[1],
                noise_sigma_px=float(row[2]),
                outlier_rate=float(row[3]),
                n_matches=int(row[4]),
                rotation_err_deg=float(row[5]),
                translation_err_m=float(row[6]),
                direction_err_deg=float(row[7]),
                inlier_count=int(row[8]),
                status=row[9],
                wall_time_us=float(row[10]),
            ))
        except ValueError as exc:
            raise ParseError(f"{path}: row {i}: {exc}") from exc
    return records
