"""Classical eight-point baseline over two reference views (8p8p).

Runs the same RANSAC shell, scoring and refinement as the planar estimators,
but builds each relative pose with the normalized eight-point algorithm and
skips the planar check cascade entirely (checks can be re-enabled for
ablations). Scale recovery reuses the two-view least-squares triangulation.
"""

import math

import numpy as np

from .absolute_pose import (
    ScaleSolution,
    consistency_check,
    pdcheck,
    rcheck,
    triangulate_2p2p,
)
from .errors import (
    DegenerateConfiguration,
    InsufficientMatches,
    ParallelDirections,
    UndefinedDirection,
)
from .geometry import Correspondence, EssentialMatrix, RigidPose, skew
from .ransac import (
    LocalizationProblem,
    LocalizationResult,
    _ProblemData,
    _run_ransac,
    _two_distinct,
    classify_inliers,  # noqa: F401  (baseline scoring is the same object)
)

_W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


def _hartley_transform(pts: np.ndarray) -> np.ndarray:
    centroid = pts.mean(axis=0)
    spread = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    s = math.sqrt(2.0) / max(spread, 1e-15)
    return np.array(
        [
            [s, 0.0, -s * centroid[0]],
            [0.0, s, -s * centroid[1]],
            [0.0, 0.0, 1.0],
        ]
    )


def solve_8pt(matches) -> EssentialMatrix:
    """Normalized eight-point essential matrix from one view's matches.

    Applies Hartley normalization to both point sets, solves the linear
    system for the kernel vector, de-normalizes, then projects onto the
    essential manifold (two equal singular values, third exactly zero).
    """
    matches = list(matches)
    if len(matches) < 8:
        raise InsufficientMatches("eight-point needs at least 8 matches")
    if any(m.reference_index != matches[0].reference_index for m in matches):
        raise ValueError("matches must reference the same view")
    qi = np.array([m.query_point for m in matches])
    qj = np.array([m.reference_point for m in matches])
    Ti = _hartley_transform(qi)
    Tj = _hartley_transform(qj)
    hi = np.column_stack([qi, np.ones(len(qi))]) @ Ti.T
    hj = np.column_stack([qj, np.ones(len(qj))]) @ Tj.T
    # row k is kron(p_j, p_i): coefficients of vec(E) in p_j^T E p_i = 0
    D = (hj[:, :, None] * hi[:, None, :]).reshape(len(matches), 9)
    _, svals, Vt = np.linalg.svd(D, full_matrices=True)
    if svals[0] < 1e-15 or svals[7] <= 1e-10 * svals[0]:
        raise DegenerateConfiguration("eight-point system is rank-deficient")
    E = Tj.T @ Vt[8].reshape(3, 3) @ Ti
    U, S, Vt2 = np.linalg.svd(E)
    s = 0.5 * (S[0] + S[1])
    return EssentialMatrix(U @ np.diag([s, s, 0.0]) @ Vt2)


def _four_candidates(E: np.ndarray):
    U, _, Vt = np.linalg.svd(E)
    if np.linalg.det(U) < 0:
        U = -U
    if np.linalg.det(Vt) < 0:
        Vt = -Vt
    R1 = U @ _W @ Vt
    R2 = U @ _W.T @ Vt
    t = U[:, 2]
    return [(R1, t), (R1, -t), (R2, t), (R2, -t)]


def _depth_votes(R: np.ndarray, t: np.ndarray, pi: np.ndarray, pj: np.ndarray) -> int:
    """Midpoint triangulation at unit baseline; votes need depth > 0 twice."""
    c = -R.T @ t
    d2 = pj @ R  # rows are R^T @ p_j
    a11 = (pi * pi).sum(axis=1)
    a12 = -(pi * d2).sum(axis=1)
    a22 = (d2 * d2).sum(axis=1)
    b1 = pi @ c
    b2 = -(d2 @ c)
    det = a11 * a22 - a12 * a12
    ok = np.abs(det) > 1e-15
    det = np.where(ok, det, 1.0)
    s = (b1 * a22 - b2 * a12) / det
    u = (a11 * b2 - a12 * b1) / det
    X = 0.5 * (s[:, None] * pi + c[None, :] + u[:, None] * d2)
    z_i = X[:, 2]
    z_j = X @ R.T[:, 2] + t[2]
    return int((ok & (z_i > 0) & (z_j > 0)).sum())


def _mean_sampson(E: np.ndarray, pi: np.ndarray, pj: np.ndarray) -> float:
    gi = pi @ E.T
    gj = pj @ E
    num = (pj * gi).sum(axis=1)
    den = np.sqrt(gi[:, 0] ** 2 + gi[:, 1] ** 2 + gj[:, 0] ** 2 + gj[:, 1] ** 2)
    if (den < 1e-15).any():
        return math.inf
    return float((np.abs(num) / den).mean())


def _select_candidate(E: np.ndarray, pi: np.ndarray, pj: np.ndarray):
    cands = _four_candidates(E)
    votes = [_depth_votes(R, t, pi, pj) for R, t in cands]
    best = max(votes)
    top = [c for c, v in zip(cands, votes) if v == best]
    if len(top) == 1:
        return top[0]
    residuals = [_mean_sampson(skew(t) @ R, pi, pj) for R, t in top]
    order = sorted(range(len(top)), key=lambda k: residuals[k])
    r0, r1 = residuals[order[0]], residuals[order[1]]
    if (math.isinf(r0) and math.isinf(r1)) or abs(r0 - r1) <= 1e-12:
        return None
    return top[order[0]]


def decompose_and_triangulate(
    ea: EssentialMatrix,
    eb: EssentialMatrix,
    matches_a,
    matches_b,
    known_ab: RigidPose,
    ref_pose_a: RigidPose,
) -> ScaleSolution:
    """Pick the cheirality-positive pose from each essential matrix, then
    recover both scales with the shared two-view least-squares solve."""

    def pts(matches):
        pi = np.array([[m.query_point[0], m.query_point[1], 1.0] for m in matches])
        pj = np.array([[m.reference_point[0], m.reference_point[1], 1.0] for m in matches])
        return pi, pj

    pia, pja = pts(matches_a)
    pib, pjb = pts(matches_b)
    picked_a = _select_candidate(ea.matrix, pia, pja)
    picked_b = _select_candidate(eb.matrix, pib, pjb)
    if picked_a is None or picked_b is None:
        raise DegenerateConfiguration("cheirality voting is ambiguous")
    rel_a = RigidPose(picked_a[0], picked_a[1])
    rel_b = RigidPose(picked_b[0], picked_b[1])
    return triangulate_2p2p(rel_a, rel_b, known_ab, ref_pose_a)


def _sample_8(rng, n: int) -> np.ndarray:
    return rng.permutation(n)[:8]


def _minimal_8p8p(elig, thresholds, enable_checks: bool):
    def draw(rng, data: _ProblemData, counters):
        ea, eb = _two_distinct(rng, len(elig))
        a, b = elig[ea], elig[eb]
        ia = _sample_8(rng, data.counts[a])
        ib = _sample_8(rng, data.counts[b])
        ref_a, ref_b = data.refs[a], data.refs[b]
        ma = [ref_a.correspondences[k] for k in ia]
        mb = [ref_b.correspondences[k] for k in ib]
        try:
            E_a = solve_8pt(ma)
            E_b = solve_8pt(mb)
        except DegenerateConfiguration:
            return None
        pia, pja = data.pi[a][ia], data.pj[a][ia]
        pib, pjb = data.pi[b][ib], data.pj[b][ib]
        picked_a = _select_candidate(E_a.matrix, pia, pja)
        picked_b = _select_candidate(E_b.matrix, pib, pjb)
        if picked_a is None or picked_b is None:
            return None
        counters.cheirality += 1
        rel_a = RigidPose(picked_a[0], picked_a[1])
        rel_b = RigidPose(picked_b[0], picked_b[1])
        t_ab = data.pair(a, b)
        if enable_checks:
            ok, _ = rcheck(rel_a, rel_b, t_ab, thresholds.rcheck_deg)
            if not ok:
                return None
        counters.rcheck += 1
        try:
            sol = triangulate_2p2p(rel_a, rel_b, t_ab, ref_a.pose)
        except ParallelDirections:
            return None
        counters.triangulated += 1
        if enable_checks and not pdcheck(sol):
            return None
        counters.pdcheck += 1
        if enable_checks:
            try:
                ok_a, _ = consistency_check(
                    sol.query_pose, ref_a, rel_a.translation, thresholds.consistency_deg
                )
                ok_b, _ = consistency_check(
                    sol.query_pose, ref_b, rel_b.translation, thresholds.consistency_deg
                )
            except UndefinedDirection:
                return None
            if not (ok_a and ok_b):
                return None
        counters.consistency += 1
        return sol.query_pose

    return draw


def estimate_8p8p(problem: LocalizationProblem, enable_checks: bool = False) -> LocalizationResult:
    """Eight points against each of two reference views.

    Raises InsufficientMatches unless at least two references hold 8+
    correspondences each.
    """
    elig = [j for j, r in enumerate(problem.references) if len(r.correspondences) >= 8]
    if len(elig) < 2:
        raise InsufficientMatches("no reference pair with 8+8 correspondences")
    return _run_ransac(problem, _minimal_8p8p(elig, problem.thresholds, enable_checks), 16)
