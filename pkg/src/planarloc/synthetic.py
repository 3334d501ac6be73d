"""Synthetic planar-motion localization scenes.

World points are drawn uniformly in a cube; the query and every reference
camera sit on the ground plane (yaw-only rotation, translation in x and z).
Points co-visible in all views are projected to each camera, perturbed with
Gaussian pixel noise, and a fraction of matches per reference is corrupted
by re-projecting the point through an unrelated random pose, which imitates
a wrong-but-plausible feature match.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .absolute_pose import ReferenceView
from .errors import InfeasibleScene
from .geometry import (
    CameraIntrinsics,
    Correspondence,
    PlanarPose,
    RigidPose,
    planar_to_rigid,
    wrap_angle,
)
from .ransac import LocalizationProblem

_MASK64 = (1 << 64) - 1
_MIN_DEPTH = 1e-6
_BATCHES_PER_POSE_SET = 60
_MAX_BATCHES = 1000
_WRONG_POSE_RETRIES = 100
_AIM_JITTER_RAD = 0.15


@dataclass(frozen=True)
class WorldConfig:
    """Scene recipe. Distances in meters, image quantities in pixels.

    n_matches counts correspondences across ALL reference views; the world
    points are split into per-reference blocks as evenly as possible, so a
    scene with 20 matches over 5 references pairs 4 points with each view.
    """

    n_matches: int = 50
    noise_sigma_px: float = 0.0
    outlier_rate: float = 0.0
    n_references: int = 2
    seed: int = 0
    point_cube_half_width: float = 10.0
    translation_range: float = 5.0
    rotation_range: float = math.pi
    focal: float = 800.0
    resolution: tuple[int, int] = (1280, 1080)
    principal_point: tuple[float, float] = (640.0, 540.0)

    def __post_init__(self):
        if self.n_matches < 1:
            raise ValueError("n_matches must be at least 1")
        if self.n_references < 2:
            raise ValueError("need at least 2 reference views")
        if not 0.0 <= self.outlier_rate <= 1.0:
            raise ValueError("outlier_rate must lie in [0, 1]")
        if self.noise_sigma_px < 0:
            raise ValueError("noise_sigma_px must be nonnegative")
        if min(self.focal, self.point_cube_half_width, self.translation_range) <= 0:
            raise ValueError("focal, cube half-width and translation range must be positive")

    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics(
            self.focal, self.focal, self.principal_point[0], self.principal_point[1]
        )


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    problem: LocalizationProblem
    ground_truth: RigidPose
    outlier_mask: tuple[tuple[bool, ...], ...]
    world_points: np.ndarray
    config: WorldConfig

    @property
    def outlier_fraction(self) -> float:
        flat = [b for row in self.outlier_mask for b in row]
        return sum(flat) / len(flat) if flat else 0.0


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _draw_pose(rng, cfg: WorldConfig) -> PlanarPose:
    # camera center uniform in the ground-plane square, yaw uniform
    cx = rng.uniform(-cfg.translation_range, cfg.translation_range)
    cz = rng.uniform(-cfg.translation_range, cfg.translation_range)
    theta = rng.uniform(-cfg.rotation_range, cfg.rotation_range)
    return PlanarPose(theta, math.hypot(cx, cz), math.atan2(cx, cz))


def _aimed_pose(rng, cfg: WorldConfig, anchor: np.ndarray) -> PlanarPose:
    """Random planar pose whose yaw points roughly at a common anchor.

    Fully independent yaws almost never leave several frustums a shared
    region, so each camera aims at the anchor plus Gaussian jitter. When the
    jittered yaw falls outside the configured rotation range the range wins
    and the yaw is drawn uniformly inside it.
    """
    cx = rng.uniform(-cfg.translation_range, cfg.translation_range)
    cz = rng.uniform(-cfg.translation_range, cfg.translation_range)
    yaw = wrap_angle(math.atan2(anchor[0] - cx, anchor[2] - cz) + rng.normal(0.0, _AIM_JITTER_RAD))
    if abs(yaw) > cfg.rotation_range:
        yaw = rng.uniform(-cfg.rotation_range, cfg.rotation_range)
    return PlanarPose(yaw, math.hypot(cx, cz), math.atan2(cx, cz))


def _draw_pose_set(rng, cfg: WorldConfig) -> tuple[RigidPose, list[RigidPose]]:
    half = 0.5 * cfg.point_cube_half_width
    anchor = np.array([rng.uniform(-half, half), 0.0, rng.uniform(-half, half)])
    query = planar_to_rigid(_aimed_pose(rng, cfg, anchor))
    refs = [planar_to_rigid(_aimed_pose(rng, cfg, anchor)) for _ in range(cfg.n_references)]
    return query, refs


def _camera_coords(pose: RigidPose, pts: np.ndarray) -> np.ndarray:
    return pts @ pose.rotation.T + pose.translation


def _pixels(cam: np.ndarray, cfg: WorldConfig) -> np.ndarray:
    z = cam[:, 2]
    safe = np.where(np.abs(z) > 1e-15, z, 1.0)
    u = cfg.focal * cam[:, 0] / safe + cfg.principal_point[0]
    v = cfg.focal * cam[:, 1] / safe + cfg.principal_point[1]
    return np.column_stack([u, v])


def _in_view(cam: np.ndarray, px: np.ndarray, cfg: WorldConfig) -> np.ndarray:
    w, h = cfg.resolution
    inside = (px[:, 0] >= 0) & (px[:, 0] <= w) & (px[:, 1] >= 0) & (px[:, 1] <= h)
    return (cam[:, 2] > _MIN_DEPTH) & inside


def _covisible_mask(pts: np.ndarray, poses: list[RigidPose], cfg: WorldConfig) -> np.ndarray:
    mask = np.ones(len(pts), dtype=bool)
    for pose in poses:
        cam = _camera_coords(pose, pts)
        mask &= _in_view(cam, _pixels(cam, cfg), cfg)
        if not mask.any():
            break
    return mask


def _normalize(px: np.ndarray, cfg: WorldConfig) -> np.ndarray:
    return (px - np.asarray(cfg.principal_point)) / cfg.focal


def _wrong_pixel(rng, point: np.ndarray, cfg: WorldConfig) -> np.ndarray:
    """Project one point through a freshly drawn unrelated pose.

    Retries until the bogus projection lands inside the image; falls back to
    a uniform in-bounds pixel if the point stubbornly projects outside.
    """
    pt = point[None, :]
    for _ in range(_WRONG_POSE_RETRIES):
        pose = planar_to_rigid(_draw_pose(rng, cfg))
        cam = _camera_coords(pose, pt)
        px = _pixels(cam, cfg)
        if _in_view(cam, px, cfg)[0]:
            return px[0]
    w, h = cfg.resolution
    return np.array([rng.uniform(0.0, w), rng.uniform(0.0, h)])


def _split_counts(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if j < extra else 0) for j in range(parts)]


def _build_scene(
    cfg: WorldConfig,
    rng,
    query: RigidPose,
    refs: list[RigidPose],
    points: np.ndarray,
) -> SyntheticScene:
    # n_matches counts correspondences over ALL references: the point set is
    # partitioned into per-reference blocks, so each point is matched against
    # exactly one reference view
    n = cfg.n_matches
    sigma = cfg.noise_sigma_px
    q_px = _pixels(_camera_coords(query, points), cfg) + rng.normal(0.0, sigma, (n, 2))
    q_norm = _normalize(q_px, cfg)
    n_out = _round_half_up(cfg.outlier_rate * n)
    out_flags = np.zeros(n, dtype=bool)
    if n_out:
        out_flags[rng.choice(n, size=n_out, replace=False)] = True
    views = []
    mask_rows = []
    start = 0
    for j, (ref, cnt) in enumerate(zip(refs, _split_counts(n, cfg.n_references))):
        block = slice(start, start + cnt)
        r_px = _pixels(_camera_coords(ref, points[block]), cfg) + rng.normal(
            0.0, sigma, (cnt, 2)
        )
        row = out_flags[block]
        for k in np.flatnonzero(row):
            r_px[k] = _wrong_pixel(rng, points[start + k], cfg) + rng.normal(0.0, sigma, 2)
        r_norm = _normalize(r_px, cfg)
        corrs = tuple(
            Correspondence(tuple(q_norm[start + k]), tuple(r_norm[k]), j)
            for k in range(cnt)
        )
        views.append(ReferenceView(ref, corrs))
        mask_rows.append(tuple(bool(b) for b in row))
        start += cnt
    # estimator settings stay at their defaults; scene identity lives in cfg
    problem = LocalizationProblem(
        intrinsics=cfg.intrinsics(),
        references=tuple(views),
    )
    pts = points.copy()
    pts.flags.writeable = False
    return SyntheticScene(problem, query, tuple(mask_rows), pts, cfg)


def generate(cfg: WorldConfig) -> SyntheticScene:
    """Deterministically build one scene from its config.

    Draws a pose set, then samples cube points in batches keeping those
    co-visible in every view; a pose set whose frustums refuse to overlap is
    thrown away after a few batches and redrawn. Raises InfeasibleScene when
    the total batch budget runs out.
    """
    rng = np.random.default_rng([cfg.seed & _MASK64, 0])
    batch_size = max(4 * cfg.n_matches, 512)
    hw = cfg.point_cube_half_width
    attempts = 0
    while attempts < _MAX_BATCHES:
        query, refs = _draw_pose_set(rng, cfg)
        poses = [query, *refs]
        kept: list[np.ndarray] = []
        found = 0
        for batch in range(_BATCHES_PER_POSE_SET):
            attempts += 1
            cand = rng.uniform(-hw, hw, (batch_size, 3))
            good = cand[_covisible_mask(cand, poses, cfg)]
            if batch == 0 and not len(good):
                break  # frustums share no region, redraw the pose set
            if len(good):
                kept.append(good)
                found += len(good)
            if found >= cfg.n_matches:
                points = np.concatenate(kept)[: cfg.n_matches]
                return _build_scene(cfg, rng, query, refs, points)
            if attempts >= _MAX_BATCHES:
                break
    raise InfeasibleScene(
        f"no pose set with {cfg.n_matches} co-visible points after {_MAX_BATCHES} attempts"
    )


def corrupt(scene: SyntheticScene, extra_outlier_rate: float) -> SyntheticScene:
    """Convert additional uniformly chosen inliers into outliers.

    The scene-wide outlier count is brought up to what a scene generated at
    the combined rate would hold; the victims are drawn uniformly over all
    remaining inliers regardless of which reference holds them. Returns a new
    scene; the input scene is untouched. extra 0 returns the scene unchanged.
    """
    if extra_outlier_rate < 0:
        raise ValueError("extra_outlier_rate must be nonnegative")
    if extra_outlier_rate == 0:
        return scene
    cfg = scene.config
    total = cfg.outlier_rate + extra_outlier_rate
    if total > 1.0 + 1e-12:
        raise ValueError("combined outlier rate exceeds 1")
    total = min(total, 1.0)
    n = cfg.n_matches
    target = _round_half_up(total * n)
    rng = np.random.default_rng(
        [cfg.seed & _MASK64, 1, _round_half_up(total * 1_000_000)]
    )
    sigma = cfg.noise_sigma_px
    rows = [list(m) for m in scene.outlier_mask]
    slots = [(j, k) for j, row in enumerate(rows) for k in range(len(row)) if not row[k]]
    extra = min(max(target - (n - len(slots)), 0), len(slots))
    victims = set()
    if extra:
        for idx in rng.choice(len(slots), size=extra, replace=False):
            victims.add(slots[int(idx)])
    offsets = [0]
    for ref in scene.problem.references:
        offsets.append(offsets[-1] + len(ref.correspondences))
    views = []
    mask_rows = []
    for j, ref in enumerate(scene.problem.references):
        row = rows[j]
        pts_q = [c.query_point for c in ref.correspondences]
        pts_r = [c.reference_point for c in ref.correspondences]
        for k in range(len(row)):
            if (j, k) in victims:
                px = _wrong_pixel(rng, scene.world_points[offsets[j] + k], cfg)
                px = px + rng.normal(0.0, sigma, 2)
                pts_r[k] = tuple(_normalize(px[None, :], cfg)[0])
                row[k] = True
        corrs = tuple(
            Correspondence(pts_q[k], pts_r[k], j) for k in range(len(row))
        )
        views.append(ReferenceView(ref.pose, corrs))
        mask_rows.append(tuple(row))
    problem = LocalizationProblem(
        intrinsics=scene.problem.intrinsics,
        references=tuple(views),
        thresholds=scene.problem.thresholds,
        iterations=scene.problem.iterations,
        rng_seed=scene.problem.rng_seed,
        adaptive=scene.problem.adaptive,
    )
    return SyntheticScene(
        problem,
        scene.ground_truth,
        tuple(mask_rows),
        scene.world_points,
        replace(cfg, outlier_rate=total),
    )
