"""Absolute pose from relative estimates against posed reference views.

Given relative pose candidates between the query and reference views whose
world poses are known, the operations here recover the missing translation
scales, validate candidates against the known inter-reference geometry
(rotation, positive depth and direction consistency checks), and refine the
final pose by minimizing Sampson residuals over inlier matches.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateCorrespondence, ParallelDirections, UndefinedDirection
from .geometry import (
    CameraIntrinsics,
    Correspondence,
    RigidPose,
    angle_between_deg,
    rotation_angle_deg,
    skew,
)

_COND_LIMIT = 1e12
_PARALLEL_TOL = 1e-9
_SKEW_BASIS = tuple(
    np.array(m, dtype=np.float64)
    for m in (
        [[0, 0, 0], [0, 0, -1], [0, 1, 0]],
        [[0, 0, 1], [0, 0, 0], [-1, 0, 0]],
        [[0, -1, 0], [1, 0, 0], [0, 0, 0]],
    )
)


@dataclass(frozen=True)
class ReferenceView:
    """A database view: world-to-camera pose plus matches to the query."""

    pose: RigidPose
    correspondences: tuple[Correspondence, ...]

    def __post_init__(self):
        object.__setattr__(self, "correspondences", tuple(self.correspondences))


@dataclass(frozen=True)
class CheckThresholds:
    """Gate thresholds for the multiple-checking cascade.

    sampson_inlier is in normalized image units; None means "derive from the
    intrinsics as 2.5 px divided by the focal length".
    """

    rcheck_deg: float = 2.0
    consistency_deg: float = 2.0
    sampson_inlier: float | None = None

    def resolved(self, intrinsics: CameraIntrinsics) -> "CheckThresholds":
        if self.sampson_inlier is not None:
            return self
        f = 0.5 * (intrinsics.fx + intrinsics.fy)
        return replace(self, sampson_inlier=2.5 / f)


@dataclass(frozen=True)
class ScaleSolution:
    """Recovered translation scales and the assembled absolute query pose."""

    rho: float
    rho2: float | None
    query_pose: RigidPose


def assemble_query_pose(rel: RigidPose, rho: float, ref_pose: RigidPose) -> RigidPose:
    """Absolute query pose from a unit-direction relative pose and its scale."""
    t_ji = RigidPose._trusted(rel.rotation, rho * rel.translation)
    return t_ji.inverse().compose(ref_pose)


def rcheck(
    rel_a: RigidPose,
    rel_b: RigidPose,
    known_ab: RigidPose,
    threshold_deg: float = 2.0,
) -> tuple[bool, float]:
    """Compare the implied inter-reference rotation with the known one.

    known_ab maps coordinates of reference b into reference a's frame; the two
    candidate relative poses imply that rotation as R_a @ R_b^T. Returns
    (pass, error in degrees).
    """
    err = rotation_angle_deg(known_ab.rotation, rel_a.rotation @ rel_b.rotation.T)
    return err <= threshold_deg, err


def triangulate_2p2p(
    rel_a: RigidPose,
    rel_b: RigidPose,
    known_ab: RigidPose,
    ref_pose_a: RigidPose,
) -> ScaleSolution:
    """Solve both translation scales from two unit-direction relative poses.

    Stacks the loop-closure constraint rho*t_a - rho2*(R_a R_b^T) t_b = t_ab
    into a 3x2 least-squares system. When the two direction columns are
    nearly parallel the normal matrix is Tikhonov-regularized; exactly
    parallel directions (within 1e-9) raise ParallelDirections.
    """
    c0 = rel_a.translation
    c1 = -(rel_a.rotation @ (rel_b.rotation.T @ rel_b.translation))
    wx = c0[1] * c1[2] - c0[2] * c1[1]
    wy = c0[2] * c1[0] - c0[0] * c1[2]
    wz = c0[0] * c1[1] - c0[1] * c1[0]
    if math.sqrt(wx * wx + wy * wy + wz * wz) < _PARALLEL_TOL:
        raise ParallelDirections("scale directions are parallel")
    b = known_ab.translation
    a11 = float(c0 @ c0)
    a12 = float(c0 @ c1)
    a22 = float(c1 @ c1)
    g1 = float(c0 @ b)
    g2 = float(c1 @ b)
    # condition number of the 2x2 normal matrix from its eigenvalues
    half_tr = 0.5 * (a11 + a22)
    rad = math.hypot(0.5 * (a11 - a22), a12)
    lo = half_tr - rad
    if lo <= 0.0 or (half_tr + rad) / lo > _COND_LIMIT:
        a11, a22 = a11 + 1.0, a22 + 1.0
    det = a11 * a22 - a12 * a12
    rho = (g1 * a22 - g2 * a12) / det
    rho2 = (a11 * g2 - a12 * g1) / det
    return ScaleSolution(rho, rho2, assemble_query_pose(rel_a, rho, ref_pose_a))


def pdcheck(solution: ScaleSolution) -> bool:
    """Positive-depth gate on the recovered scales."""
    if solution.rho <= 0.0:
        return False
    return solution.rho2 is None or solution.rho2 > 0.0


def consistency_check(
    query_pose: RigidPose,
    ref: ReferenceView,
    t_tilde: np.ndarray,
    threshold_deg: float = 2.0,
) -> tuple[bool, float]:
    """Angle between the estimated direction and the absolute-pose one.

    The absolute poses place the query center at c_i and the reference center
    at c_j; the direction from reference to query expressed in the reference
    frame must agree with the unit direction t_tilde recovered from the
    essential matrix. Raises UndefinedDirection for coincident centers.
    """
    v = query_pose.center() - ref.pose.center()
    if math.sqrt(float(v @ v)) < 1e-12:
        raise UndefinedDirection("camera centers coincide")
    t_hat = ref.pose.rotation @ v
    err = angle_between_deg(np.asarray(t_tilde, dtype=np.float64), t_hat)
    return err <= threshold_deg, err


def solve_scale_2p1p(
    rel_a: RigidPose,
    known_ba: RigidPose,
    corr: Correspondence,
) -> float:
    """Translation scale from a single correspondence to a second reference.

    known_ba maps the anchor reference frame into the second reference frame.
    The correspondence's epipolar constraint against the second reference is
    linear in rho; the rho coefficient vanishing (|.| < 1e-12) means this
    correspondence cannot observe the scale and raises
    DegenerateCorrespondence.
    """
    ui, vi = corr.query_point
    uj, vj = corr.reference_point
    Rc = known_ba.rotation @ rel_a.rotation
    u0 = Rc[0, 0] * ui + Rc[0, 1] * vi + Rc[0, 2]
    u1 = Rc[1, 0] * ui + Rc[1, 1] * vi + Rc[1, 2]
    u2 = Rc[2, 0] * ui + Rc[2, 1] * vi + Rc[2, 2]
    a0, a1, a2 = known_ba.rotation @ rel_a.translation
    b0, b1, b2 = known_ba.translation
    # scalar triple products p_j . (a x u) and p_j . (b x u)
    den = uj * (a1 * u2 - a2 * u1) + vj * (a2 * u0 - a0 * u2) + (a0 * u1 - a1 * u0)
    if abs(den) < 1e-12:
        raise DegenerateCorrespondence("scale coefficient vanishes")
    num = uj * (b1 * u2 - b2 * u1) + vj * (b2 * u0 - b0 * u2) + (b0 * u1 - b1 * u0)
    return float(-num / den)


# ---------------------------------------------------------------------------
# Sampson refinement
# ---------------------------------------------------------------------------


def _exp_so3(w: np.ndarray) -> np.ndarray:
    theta = np.linalg.norm(w)
    K = skew(w)
    if theta < 1e-12:
        return np.eye(3) + K + 0.5 * (K @ K)
    return (
        np.eye(3)
        + (math.sin(theta) / theta) * K
        + ((1.0 - math.cos(theta)) / (theta * theta)) * (K @ K)
    )


def _gather_points(references, inlier_sets):
    gathered = []
    for ref, idx in zip(references, inlier_sets):
        if len(idx) == 0:
            gathered.append(None)
            continue
        pi = np.array([[ref.correspondences[k].query_point[0],
                        ref.correspondences[k].query_point[1], 1.0] for k in idx])
        pj = np.array([[ref.correspondences[k].reference_point[0],
                        ref.correspondences[k].reference_point[1], 1.0] for k in idx])
        gathered.append((ref.pose, pi, pj))
    return gathered


def _residuals_only(R_i, t_i, gathered):
    out = []
    for entry in gathered:
        if entry is None:
            continue
        ref_pose, pi, pj = entry
        R_rel = ref_pose.rotation @ R_i.T
        t_rel = ref_pose.translation - R_rel @ t_i
        E = skew(t_rel) @ R_rel
        gi = pi @ E.T
        gj = pj @ E
        num = np.einsum("ij,ij->i", pj, gi)
        den = np.sqrt(gi[:, 0] ** 2 + gi[:, 1] ** 2 + gj[:, 0] ** 2 + gj[:, 1] ** 2)
        out.append(num / np.maximum(den, 1e-15))
    return np.concatenate(out) if out else np.zeros(0)


def _residuals_and_jacobian(R_i, t_i, gathered):
    res = []
    jac = []
    for entry in gathered:
        if entry is None:
            continue
        ref_pose, pi, pj = entry
        R_rel = ref_pose.rotation @ R_i.T
        t_rel = ref_pose.translation - R_rel @ t_i
        E = skew(t_rel) @ R_rel
        gi = pi @ E.T
        gj = pj @ E
        num = np.einsum("ij,ij->i", pj, gi)
        den = np.sqrt(gi[:, 0] ** 2 + gi[:, 1] ** 2 + gj[:, 0] ** 2 + gj[:, 1] ** 2)
        den = np.maximum(den, 1e-15)
        r = num / den
        J = np.empty((len(r), 6))
        Mt = R_rel @ skew(t_i)
        for k in range(6):
            if k < 3:
                dR_rel = -R_rel @ _SKEW_BASIS[k]
                # cross(e_k, t_i) is column k of -skew(t_i)
                dt_rel = -Mt[:, k]
            else:
                dR_rel = np.zeros((3, 3))
                dt_rel = -R_rel[:, k - 3]
            dE = skew(dt_rel) @ R_rel + skew(t_rel) @ dR_rel
            dgi = pi @ dE.T
            dgj = pj @ dE
            dnum = np.einsum("ij,ij->i", pj, dgi)
            dden = (
                gi[:, 0] * dgi[:, 0]
                + gi[:, 1] * dgi[:, 1]
                + gj[:, 0] * dgj[:, 0]
                + gj[:, 1] * dgj[:, 1]
            ) / den
            J[:, k] = (dnum - r * dden) / den
        res.append(r)
        jac.append(J)
    if not res:
        return np.zeros(0), np.zeros((0, 6))
    return np.concatenate(res), np.vstack(jac)


def refinement_residuals(pose: RigidPose, references, inlier_sets) -> np.ndarray:
    """Sampson residual vector of the inlier matches at a query pose."""
    return _residuals_only(pose.rotation, pose.translation, _gather_points(references, inlier_sets))


def refinement_system(pose: RigidPose, references, inlier_sets):
    """Residual vector and analytic Jacobian w.r.t. the pose increment.

    The increment is a 6-vector (w, v): the updated pose applies rotation
    exp(skew(w)) on the left of the current rotation and adds v to the
    translation.
    """
    return _residuals_and_jacobian(
        pose.rotation, pose.translation, _gather_points(references, inlier_sets)
    )


@dataclass(frozen=True)
class RefinementResult:
    pose: RigidPose
    converged: bool
    initial_cost: float
    final_cost: float
    iterations: int


def refine_pose(initial: RigidPose, problem, inlier_sets) -> RefinementResult:
    """Damped Gauss-Newton over the summed squared Sampson residuals.

    Stops when the step norm drops below 1e-10; gives up after 50 iterations
    and returns the best pose found with converged=False. Only
    cost-decreasing steps are accepted, so the final cost never exceeds the
    initial one.
    """
    references = problem.references
    total = sum(len(s) for s in inlier_sets)
    if total < 6:
        raise ValueError("refinement needs at least 6 inliers")
    gathered = _gather_points(references, inlier_sets)

    R = initial.rotation
    t = initial.translation
    r = _residuals_only(R, t, gathered)
    cost = float(r @ r)
    initial_cost = cost
    mu = 1e-6
    converged = False
    iterations = 0
    eye6 = np.eye(6)
    for iterations in range(1, 51):
        r, J = _residuals_and_jacobian(R, t, gathered)
        g = J.T @ r
        H = J.T @ J
        moved = False
        for _ in range(60):
            try:
                d = np.linalg.solve(H + mu * eye6, -g)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            if np.linalg.norm(d) < 1e-10:
                converged = True
                break
            R_new = _exp_so3(d[:3]) @ R
            t_new = t + d[3:]
            r_new = _residuals_only(R_new, t_new, gathered)
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                R, t, cost = R_new, t_new, cost_new
                mu = max(mu / 3.0, 1e-12)
                moved = True
                break
            mu *= 4.0
        if converged or not moved:
            converged = converged or not moved
            break
    return RefinementResult(RigidPose(R, t), converged, initial_cost, cost, iterations)
