"""Core geometric types and operations for planar-motion localization.

Conventions used throughout the package:

- A pose maps world coordinates into the camera frame: x_cam = R @ x_world + t.
- A relative pose "from view i to view j" maps i-frame coordinates into the
  j-frame, so T_ji = T_jw o T_iw^-1.
- Planar motion is a rotation about the camera y-axis plus a translation in
  the xz-plane, parameterized by yaw theta, length rho and direction phi:
  R = R_y(theta), t = -R @ rho * [sin(phi), 0, cos(phi)].
- Image points are used in normalized camera coordinates (pixels with the
  intrinsics undone).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMotion

TAU = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Wrap an angle to the interval (-pi, pi]."""
    w = math.remainder(angle, TAU)
    if w <= -math.pi:
        w += TAU
    return w


def rotation_y(angle: float) -> np.ndarray:
    """Rotation matrix about the y-axis."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(v) @ w == cross(v, w)."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def _as_readonly(a, shape) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("non-finite values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics (square pixels not assumed)."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")


@dataclass(frozen=True)
class PlanarPose:
    """Three-parameter planar motion (yaw, translation length, direction).

    Angles are stored wrapped to (-pi, pi]; rho must be non-negative.
    """

    theta: float
    rho: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.rho) and math.isfinite(self.phi)):
            raise ValueError("non-finite planar pose")
        if self.rho < 0:
            raise ValueError("rho must be non-negative")
        object.__setattr__(self, "theta", wrap_angle(self.theta))
        object.__setattr__(self, "phi", wrap_angle(self.phi))


@dataclass(frozen=True)
class RigidPose:
    """Rigid transform x_out = rotation @ x_in + translation.

    The rotation is validated to be a proper rotation (orthonormal,
    determinant +1) within 1e-9. Arrays are stored read-only.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = _as_readonly(self.rotation, (3, 3))
        t = _as_readonly(self.translation, (3,))
        if np.abs(R @ R.T - np.eye(3)).max() > 1e-9 or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation is not orthonormal with det +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "RigidPose":
        return RigidPose(np.eye(3), np.zeros(3))

    @staticmethod
    def _trusted(rotation: np.ndarray, translation: np.ndarray) -> "RigidPose":
        # fast path for poses derived from already-validated ones; skips the
        # orthonormality check and the defensive copy
        obj = object.__new__(RigidPose)
        object.__setattr__(obj, "rotation", rotation)
        object.__setattr__(obj, "translation", translation)
        return obj

    def inverse(self) -> "RigidPose":
        Rt = self.rotation.T
        return RigidPose._trusted(Rt, -Rt @ self.translation)

    def compose(self, other: "RigidPose") -> "RigidPose":
        """self o other: apply `other` first, then `self`."""
        return RigidPose._trusted(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def center(self) -> np.ndarray:
        """Camera center in the input (world) frame."""
        return -self.rotation.T @ self.translation


@dataclass(frozen=True)
class EssentialMatrix:
    """A 3x3 essential matrix wrapper; E is stored read-only."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_readonly(self.matrix, (3, 3)))


@dataclass(frozen=True)
class Correspondence:
    """A 2D-2D match between the query view and one reference view.

    Both points are in normalized camera coordinates.
    """

    query_point: tuple[float, float]
    reference_point: tuple[float, float]
    reference_index: int

    def __post_init__(self):
        q = (float(self.query_point[0]), float(self.query_point[1]))
        r = (float(self.reference_point[0]), float(self.reference_point[1]))
        if not all(map(math.isfinite, q + r)):
            raise ValueError("non-finite correspondence")
        object.__setattr__(self, "query_point", q)
        object.__setattr__(self, "reference_point", r)


def planar_to_rigid(pose: PlanarPose) -> RigidPose:
    """Expand a planar motion into its rigid transform."""
    R = rotation_y(pose.theta)
    t = -R @ np.array([pose.rho * math.sin(pose.phi), 0.0, pose.rho * math.cos(pose.phi)])
    return RigidPose(R, t)


def essential_from_planar(pose: PlanarPose) -> EssentialMatrix:
    """Essential matrix of a planar motion in closed form.

    The five structurally zero entries are exact zeros by construction.
    Raises DegenerateMotion when rho <= 0 (no epipolar geometry).
    """
    if pose.rho <= 0:
        raise DegenerateMotion("planar motion has no translation")
    d = pose.theta - pose.phi
    r = pose.rho
    E = np.array(
        [
            [0.0, r * math.cos(d), 0.0],
            [-r * math.cos(pose.phi), 0.0, r * math.sin(pose.phi)],
            [0.0, r * math.sin(d), 0.0],
        ]
    )
    return EssentialMatrix(E)


def essential_from_pose(rel: RigidPose) -> EssentialMatrix:
    """Essential matrix [t]_x R of a general relative pose."""
    return EssentialMatrix(skew(rel.translation) @ rel.rotation)


def normalize_pixel(point, intrinsics: CameraIntrinsics) -> tuple[float, float]:
    """Undo the intrinsics: pixel -> normalized camera coordinates."""
    return (
        (float(point[0]) - intrinsics.cx) / intrinsics.fx,
        (float(point[1]) - intrinsics.cy) / intrinsics.fy,
    )


def epipolar_residual(corr: Correspondence, E: EssentialMatrix) -> float:
    """First-order (Sampson) distance of a correspondence to an essential matrix.

    Returns +inf when the Sampson denominator falls below 1e-15, which happens
    for an exactly zero E or points at the epipoles.
    """
    M = E.matrix
    ui, vi = corr.query_point
    uj, vj = corr.reference_point
    # epipolar line in the reference image and its transpose counterpart
    gi0 = M[0, 0] * ui + M[0, 1] * vi + M[0, 2]
    gi1 = M[1, 0] * ui + M[1, 1] * vi + M[1, 2]
    gi2 = M[2, 0] * ui + M[2, 1] * vi + M[2, 2]
    gj0 = M[0, 0] * uj + M[1, 0] * vj + M[2, 0]
    gj1 = M[0, 1] * uj + M[1, 1] * vj + M[2, 1]
    num = uj * gi0 + vj * gi1 + gi2
    den = math.sqrt(gi0 * gi0 + gi1 * gi1 + gj0 * gj0 + gj1 * gj1)
    if den < 1e-15:
        return math.inf
    return abs(num) / den


def rotation_angle_deg(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Geodesic angle between two rotations, in degrees.

    Equivalent to acos(0.5 * trace(Ra @ Rb.T) - 0.5) but evaluated through
    atan2 so that angles near 0 and pi do not lose precision to rounding of
    the trace.
    """
    M = Ra @ Rb.T
    c = 0.5 * (M[0, 0] + M[1, 1] + M[2, 2]) - 0.5
    s = 0.5 * math.sqrt(
        (M[2, 1] - M[1, 2]) ** 2 + (M[0, 2] - M[2, 0]) ** 2 + (M[1, 0] - M[0, 1]) ** 2
    )
    return math.degrees(math.atan2(s, min(max(c, -1.0), 1.0)))


def angle_between_deg(a: np.ndarray, b: np.ndarray) -> float:
    """Angle between two 3-vectors in degrees, stable near 0 and 180."""
    cx = a[1] * b[2] - a[2] * b[1]
    cy = a[2] * b[0] - a[0] * b[2]
    cz = a[0] * b[1] - a[1] * b[0]
    cross = math.sqrt(cx * cx + cy * cy + cz * cz)
    dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    return math.degrees(math.atan2(cross, dot))
