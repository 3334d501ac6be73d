"""Hand-built exact scenes, independent of the package's scene generator.

Cameras are placed near the origin looking roughly down +z and points in a
box a few meters ahead, which guarantees positive depth in every view
without any resampling.
"""

import numpy as np

from planarloc import (
    CameraIntrinsics,
    Correspondence,
    LocalizationProblem,
    PlanarPose,
    ReferenceView,
    RigidPose,
    planar_to_rigid,
    rotation_y,
)

INTR = CameraIntrinsics(800.0, 800.0, 640.0, 540.0)


def project(pose: RigidPose, point) -> tuple[float, float]:
    """Normalized pinhole projection of one world point."""
    cam = pose.rotation @ np.asarray(point, dtype=np.float64) + pose.translation
    return (float(cam[0] / cam[2]), float(cam[1] / cam[2]))


def depth(pose: RigidPose, point) -> float:
    cam = pose.rotation @ np.asarray(point, dtype=np.float64) + pose.translation
    return float(cam[2])


def forward_pose(rng, spread: float = 2.0, yaw: float = 0.35) -> RigidPose:
    """Random planar pose near the origin with a small yaw."""
    theta = float(rng.uniform(-yaw, yaw))
    c = np.array([rng.uniform(-spread, spread), 0.0, rng.uniform(-spread, spread)])
    R = rotation_y(theta)
    return RigidPose(R, -R @ c)


def forward_points(rng, n: int) -> np.ndarray:
    """World points ahead of every forward_pose camera."""
    return np.column_stack(
        [rng.uniform(-3, 3, n), rng.uniform(-2, 2, n), rng.uniform(8, 14, n)]
    )


def random_planar(rng, rho=(0.5, 4.0)) -> PlanarPose:
    return PlanarPose(
        float(rng.uniform(-np.pi, np.pi)),
        float(rng.uniform(*rho)),
        float(rng.uniform(-np.pi, np.pi)),
    )


def build_problem(query: RigidPose, ref_poses, ref_points, **kwargs) -> LocalizationProblem:
    """Exact correspondences from direct projection, one point block per reference."""
    refs = []
    for j, (pose, pts) in enumerate(zip(ref_poses, ref_points)):
        corrs = tuple(
            Correspondence(project(query, p), project(pose, p), j) for p in pts
        )
        refs.append(ReferenceView(pose, corrs))
    return LocalizationProblem(INTR, tuple(refs), **kwargs)


def unit_relative(query: RigidPose, ref: RigidPose) -> tuple[RigidPose, float]:
    """Unit-direction relative pose mapping query coords into ref coords, plus its scale."""
    rel = ref.compose(query.inverse())
    rho = float(np.linalg.norm(rel.translation))
    return RigidPose(rel.rotation, rel.translation / rho), rho


def exact_pair(query: RigidPose, ref: RigidPose, points, j: int = 0):
    """Correspondences of the given world points between query and one reference."""
    return [Correspondence(project(query, p), project(ref, p), j) for p in points]
