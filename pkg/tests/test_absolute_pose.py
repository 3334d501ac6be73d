import math

import numpy as np
import pytest

from planarloc import (
    Correspondence,
    DegenerateCorrespondence,
    LocalizationProblem,
    ParallelDirections,
    PlanarPose,
    ReferenceView,
    RigidPose,
    ScaleSolution,
    UndefinedDirection,
    consistency_check,
    pdcheck,
    planar_to_rigid,
    rcheck,
    refine_pose,
    solve_scale_2p1p,
    triangulate_2p2p,
)
from planarloc.absolute_pose import (
    CheckThresholds,
    assemble_query_pose,
    refinement_residuals,
    refinement_system,
)
from planarloc.geometry import rotation_angle_deg, rotation_y, skew

from helpers import (
    INTR,
    build_problem,
    forward_points,
    forward_pose,
    project,
    unit_relative,
)


def planar_trio(rng, min_sep: float = 0.4):
    """Query plus two reference poses with pairwise separated centers."""
    while True:
        q, ra, rb = (forward_pose(rng) for _ in range(3))
        cq, ca, cb = q.center(), ra.center(), rb.center()
        if (
            np.linalg.norm(cq - ca) > min_sep
            and np.linalg.norm(cq - cb) > min_sep
            and np.linalg.norm(ca - cb) > min_sep
        ):
            return q, ra, rb


def well_conditioned_trio(rng):
    """A trio whose two scale directions are far from parallel."""
    while True:
        q, ra, rb = planar_trio(rng)
        rel_a, _ = unit_relative(q, ra)
        rel_b, _ = unit_relative(q, rb)
        c1 = -(rel_a.rotation @ (rel_b.rotation.T @ rel_b.translation))
        if np.linalg.norm(np.cross(rel_a.translation, c1)) > 0.2:
            return q, ra, rb


def rodrigues(w: np.ndarray) -> np.ndarray:
    th = float(np.linalg.norm(w))
    if th < 1e-12:
        return np.eye(3)
    K = skew(w / th)
    return np.eye(3) + math.sin(th) * K + (1.0 - math.cos(th)) * (K @ K)


def jitter_query(problem: LocalizationProblem, rng, sigma_px: float) -> LocalizationProblem:
    s = sigma_px / INTR.fx
    refs = []
    for rv in problem.references:
        corrs = tuple(
            Correspondence(
                (c.query_point[0] + rng.normal(0.0, s), c.query_point[1] + rng.normal(0.0, s)),
                c.reference_point,
                c.reference_index,
            )
            for c in rv.correspondences
        )
        refs.append(ReferenceView(rv.pose, corrs))
    return LocalizationProblem(INTR, tuple(refs))


def test_assemble_query_pose_roundtrip():
    rng = np.random.default_rng(40)
    for _ in range(100):
        q, ra, _ = planar_trio(rng)
        rel, rho = unit_relative(q, ra)
        back = assemble_query_pose(rel, rho, ra)
        assert np.allclose(back.rotation, q.rotation, atol=1e-12)
        assert np.allclose(back.translation, q.translation, atol=1e-12)


def test_rcheck_accepts_consistent_pair():
    rng = np.random.default_rng(41)
    q, ra, rb = planar_trio(rng)
    rel_a, _ = unit_relative(q, ra)
    rel_b, _ = unit_relative(q, rb)
    known_ab = ra.compose(rb.inverse())
    ok, err = rcheck(rel_a, rel_b, known_ab)
    assert ok
    assert err < 1e-6


def test_rcheck_flags_rotation_mismatch():
    rng = np.random.default_rng(42)
    q, ra, rb = planar_trio(rng)
    rel_a, _ = unit_relative(q, ra)
    rel_b, _ = unit_relative(q, rb)
    known_ab = ra.compose(rb.inverse())
    bad = RigidPose(rotation_y(math.radians(5.0)) @ rel_a.rotation, rel_a.translation)
    ok, err = rcheck(bad, rel_b, known_ab)
    assert not ok
    assert abs(err - 5.0) < 1e-9


def test_rcheck_threshold_is_inclusive_bound():
    rng = np.random.default_rng(43)
    q, ra, rb = planar_trio(rng)
    rel_a, _ = unit_relative(q, ra)
    rel_b, _ = unit_relative(q, rb)
    known_ab = ra.compose(rb.inverse())
    off = RigidPose(rotation_y(math.radians(1.0)) @ rel_a.rotation, rel_a.translation)
    assert rcheck(off, rel_b, known_ab, threshold_deg=2.0)[0]
    assert not rcheck(off, rel_b, known_ab, threshold_deg=0.5)[0]


def test_triangulate_2p2p_recovers_both_scales():
    rng = np.random.default_rng(44)
    for _ in range(200):
        q, ra, rb = well_conditioned_trio(rng)
        rel_a, rho_a = unit_relative(q, ra)
        rel_b, rho_b = unit_relative(q, rb)
        known_ab = ra.compose(rb.inverse())
        sol = triangulate_2p2p(rel_a, rel_b, known_ab, ra)
        assert abs(sol.rho - rho_a) < 1e-9 * max(1.0, rho_a)
        assert abs(sol.rho2 - rho_b) < 1e-9 * max(1.0, rho_b)
        assert np.allclose(sol.query_pose.rotation, q.rotation, atol=1e-9)
        assert np.allclose(sol.query_pose.translation, q.translation, atol=1e-9)


def test_triangulate_2p2p_symmetric_layout_gives_equal_scales():
    q = RigidPose.identity()
    ra = planar_to_rigid(PlanarPose(0.4, 1.7, 0.3))
    rb = planar_to_rigid(PlanarPose(-0.5, 1.7, -0.9))
    rel_a, _ = unit_relative(q, ra)
    rel_b, _ = unit_relative(q, rb)
    sol = triangulate_2p2p(rel_a, rel_b, ra.compose(rb.inverse()), ra)
    assert abs(sol.rho - 1.7) < 1e-9
    assert abs(sol.rho2 - 1.7) < 1e-9


def test_triangulate_2p2p_parallel_directions_raise():
    rel = RigidPose(rotation_y(0.3), np.array([0.6, 0.0, -0.8]))
    with pytest.raises(ParallelDirections):
        triangulate_2p2p(rel, rel, RigidPose.identity(), RigidPose.identity())


def test_pdcheck_gates_on_scale_signs():
    pose = RigidPose.identity()
    assert pdcheck(ScaleSolution(1.2, 0.8, pose))
    assert pdcheck(ScaleSolution(1.2, None, pose))
    assert not pdcheck(ScaleSolution(-0.3, 0.8, pose))
    assert not pdcheck(ScaleSolution(1.2, -0.8, pose))
    assert not pdcheck(ScaleSolution(0.0, 0.8, pose))


def test_consistency_check_true_pose_nearly_zero_angle():
    rng = np.random.default_rng(45)
    for _ in range(50):
        q, ra, _ = planar_trio(rng)
        rel_a, _ = unit_relative(q, ra)
        ref = ReferenceView(ra, ())
        ok, err = consistency_check(q, ref, rel_a.translation)
        assert ok
        assert err < 1e-6


def test_consistency_check_perpendicular_direction():
    rng = np.random.default_rng(46)
    q, ra, _ = planar_trio(rng)
    rel_a, _ = unit_relative(q, ra)
    ref = ReferenceView(ra, ())
    sideways = rotation_y(math.pi / 2) @ rel_a.translation
    ok, err = consistency_check(q, ref, sideways)
    assert not ok
    assert abs(err - 90.0) < 1e-6


def test_consistency_check_coincident_centers_raise():
    q = RigidPose.identity()
    ref = ReferenceView(RigidPose(rotation_y(0.5), np.zeros(3)), ())
    with pytest.raises(UndefinedDirection):
        consistency_check(q, ref, np.array([0.0, 0.0, 1.0]))


def test_solve_scale_2p1p_recovers_scale_1000_scenes():
    rng = np.random.default_rng(47)
    for _ in range(1000):
        q, ra, rb = planar_trio(rng)
        rel_a, rho_a = unit_relative(q, ra)
        known_ba = rb.compose(ra.inverse())
        p = forward_points(rng, 1)[0]
        corr = Correspondence(project(q, p), project(rb, p), 1)
        rho = solve_scale_2p1p(rel_a, known_ba, corr)
        assert abs(rho - rho_a) < 1e-9 * max(1.0, rho_a)


def test_solve_scale_2p1p_degenerate_reference_point():
    # a reference point inside span{a, u} zeroes the rho coefficient exactly
    rng = np.random.default_rng(48)
    q, ra, rb = planar_trio(rng)
    rel_a, _ = unit_relative(q, ra)
    known_ba = rb.compose(ra.inverse())
    p = forward_points(rng, 1)[0]
    ui, vi = project(q, p)
    Rc = known_ba.rotation @ rel_a.rotation
    u = Rc @ np.array([ui, vi, 1.0])
    a = known_ba.rotation @ rel_a.translation
    mix = a + u
    assert abs(mix[2]) > 1e-6
    corr = Correspondence((ui, vi), (mix[0] / mix[2], mix[1] / mix[2]), 1)
    with pytest.raises(DegenerateCorrespondence):
        solve_scale_2p1p(rel_a, known_ba, corr)


def test_solve_scale_2p1p_scales_with_baseline():
    rng = np.random.default_rng(49)
    q, ra, rb = planar_trio(rng)
    rel_a, _ = unit_relative(q, ra)
    known_ba = rb.compose(ra.inverse())
    p = forward_points(rng, 1)[0]
    corr = Correspondence(project(q, p), project(rb, p), 1)
    rho = solve_scale_2p1p(rel_a, known_ba, corr)
    doubled = RigidPose(known_ba.rotation, 2.0 * known_ba.translation)
    assert abs(solve_scale_2p1p(rel_a, doubled, corr) - 2.0 * rho) < 1e-12


def test_check_thresholds_resolve_sampson_from_focal():
    t = CheckThresholds().resolved(INTR)
    assert t.sampson_inlier == 2.5 / 800.0
    pinned = CheckThresholds(sampson_inlier=0.01).resolved(INTR)
    assert pinned.sampson_inlier == 0.01


def refinement_scene(rng, per_ref: int = 12):
    q, ra, rb = planar_trio(rng)
    pts = forward_points(rng, 2 * per_ref)
    problem = build_problem(q, [ra, rb], [pts[:per_ref], pts[per_ref:]])
    sets = [list(range(per_ref)), list(range(per_ref))]
    return q, problem, sets


def test_refine_pose_stationary_at_truth():
    rng = np.random.default_rng(50)
    q, problem, sets = refinement_scene(rng)
    res = refine_pose(q, problem, sets)
    assert res.final_cost <= res.initial_cost
    assert res.final_cost < 1e-20
    assert rotation_angle_deg(res.pose.rotation, q.rotation) < 1e-7
    assert np.linalg.norm(res.pose.translation - q.translation) < 1e-7


def test_refine_pose_recovers_from_small_offset():
    rng = np.random.default_rng(51)
    for _ in range(10):
        q, problem, sets = refinement_scene(rng)
        initial = RigidPose(
            rotation_y(math.radians(1.0)) @ q.rotation,
            q.translation + np.array([0.03, 0.0, 0.04]),
        )
        res = refine_pose(initial, problem, sets)
        assert rotation_angle_deg(res.pose.rotation, q.rotation) < 1e-6
        assert np.linalg.norm(res.pose.translation - q.translation) < 1e-6


def separated_poses(rng, n: int, min_sep: float = 1.0):
    """Poses whose centers are pairwise at least min_sep apart."""
    poses = []
    while len(poses) < n:
        cand = forward_pose(rng)
        c = cand.center()
        if all(np.linalg.norm(c - p.center()) > min_sep for p in poses):
            poses.append(cand)
    return poses


def test_refine_pose_improves_noisy_estimates():
    # initial errors sized like a minimal-sample estimate (a few degrees,
    # a few decimeters): coarse enough to leave room below the refinement
    # optimum's own scatter, small enough to stay in its basin
    rng = np.random.default_rng(52)
    improved = 0
    for _ in range(100):
        q, ra, rb, rc, rd = separated_poses(rng, 5)
        pts = forward_points(rng, 100)
        problem = build_problem(q, [ra, rb, rc, rd], [pts[k : k + 25] for k in range(0, 100, 25)])
        noisy = jitter_query(problem, rng, 2.0)
        dt = rng.normal(0.0, 1.0, 3)
        initial = RigidPose(
            rotation_y(math.radians(3.0) * rng.choice([-1.0, 1.0])) @ q.rotation,
            q.translation + 0.4 * dt / np.linalg.norm(dt),
        )
        sets = [list(range(25))] * 4
        res = refine_pose(initial, noisy, sets)
        before = rotation_angle_deg(initial.rotation, q.rotation) + np.linalg.norm(
            initial.translation - q.translation
        )
        after = rotation_angle_deg(res.pose.rotation, q.rotation) + np.linalg.norm(
            res.pose.translation - q.translation
        )
        improved += after <= before
    assert improved >= 95


def test_refine_pose_cost_never_increases():
    rng = np.random.default_rng(53)
    for _ in range(20):
        q, problem, sets = refinement_scene(rng)
        noisy = jitter_query(problem, rng, 3.0)
        initial = RigidPose(
            rotation_y(rng.normal(0.0, 0.02)) @ q.rotation,
            q.translation + rng.normal(0.0, 0.05, 3),
        )
        res = refine_pose(initial, noisy, sets)
        assert res.final_cost <= res.initial_cost


def test_refine_pose_needs_six_inliers():
    rng = np.random.default_rng(54)
    q, problem, _ = refinement_scene(rng)
    with pytest.raises(ValueError):
        refine_pose(q, problem, [[0, 1, 2], [0, 1]])


def test_refinement_jacobian_matches_central_differences():
    rng = np.random.default_rng(55)
    eps = 1e-6
    for _ in range(5):
        q, problem, sets = refinement_scene(rng, per_ref=8)
        noisy = jitter_query(problem, rng, 2.0)
        pose = RigidPose(
            rotation_y(rng.normal(0.0, 0.03)) @ q.rotation,
            q.translation + rng.normal(0.0, 0.05, 3),
        )
        r, J = refinement_system(pose, noisy.references, sets)
        fd = np.empty_like(J)
        for k in range(6):
            d = np.zeros(6)
            d[k] = eps
            plus = RigidPose(rodrigues(d[:3]) @ pose.rotation, pose.translation + d[3:])
            minus = RigidPose(rodrigues(-d[:3]) @ pose.rotation, pose.translation - d[3:])
            rp = refinement_residuals(plus, noisy.references, sets)
            rm = refinement_residuals(minus, noisy.references, sets)
            fd[:, k] = (rp - rm) / (2.0 * eps)
        rel = np.linalg.norm(fd - J) / np.linalg.norm(J)
        assert rel < 1e-4


def test_refinement_system_skips_empty_reference_sets():
    rng = np.random.default_rng(56)
    q, problem, _ = refinement_scene(rng)
    r, J = refinement_system(q, problem.references, [[0, 1, 2], []])
    assert len(r) == 3
    assert J.shape == (3, 6)
