import numpy as np
import pytest

from planarloc import (
    Correspondence,
    InsufficientMatches,
    InvalidProblem,
    LocalizationProblem,
    ReferenceView,
    RigidPose,
    SolveStatus,
    SuccessCriterion,
    classify_inliers,
    estimate_2p1p,
    estimate_2p2p,
    estimate_8p8p,
    pose_error,
)
from planarloc.geometry import rotation_y
from planarloc.synthetic import WorldConfig, generate

from helpers import INTR, build_problem, forward_points, forward_pose

EXACT = 1e-6


def clean_problem(seed: int, n_refs: int = 5, per_ref: int = 20, **kwargs):
    rng = np.random.default_rng(seed)
    query = forward_pose(rng)
    refs = []
    while len(refs) < n_refs:
        cand = forward_pose(rng)
        if np.linalg.norm(cand.center() - query.center()) > 0.5 and all(
            np.linalg.norm(cand.center() - r.center()) > 0.5 for r in refs
        ):
            refs.append(cand)
    pts = forward_points(rng, n_refs * per_ref)
    blocks = [pts[j * per_ref : (j + 1) * per_ref] for j in range(n_refs)]
    return query, build_problem(query, refs, blocks, **kwargs)


def garbled(problem: LocalizationProblem, rng, victims=None) -> LocalizationProblem:
    """Replace the reference points of the victim flat indices (default all)."""
    flat = 0
    refs = []
    for rv in problem.references:
        corrs = []
        for c in rv.correspondences:
            if victims is None or flat in victims:
                c = Correspondence(
                    c.query_point,
                    (rng.uniform(-0.8, 0.8), rng.uniform(-0.6, 0.6)),
                    c.reference_index,
                )
            corrs.append(c)
            flat += 1
        refs.append(ReferenceView(rv.pose, tuple(corrs)))
    return LocalizationProblem(INTR, tuple(refs))


def test_estimate_2p2p_exact_on_clean_five_reference_scene():
    query, problem = clean_problem(60)
    result = estimate_2p2p(problem)
    assert result.status is SolveStatus.SUCCESS
    assert result.inlier_count == 100
    assert result.inlier_count == sum(len(s) for s in result.inlier_sets)
    err = pose_error(result.pose, query)
    assert err.translation_m < EXACT
    assert err.rotation_deg < EXACT


def test_estimate_2p1p_exact_on_clean_five_reference_scene():
    query, problem = clean_problem(61)
    result = estimate_2p1p(problem)
    assert result.status is SolveStatus.SUCCESS
    assert result.inlier_count == 100
    err = pose_error(result.pose, query)
    assert err.translation_m < EXACT
    assert err.rotation_deg < EXACT


def test_estimate_2p2p_all_outliers_returns_no_valid_sample():
    # seed-pinned: random mismatches can sneak a sample through the cascade
    # roughly once per hundred draws, so not every seed ends empty-handed
    rng = np.random.default_rng(5)
    _, problem = clean_problem(62)
    hopeless = garbled(problem, rng)
    result = estimate_2p2p(hopeless)
    assert result.status is SolveStatus.NO_VALID_SAMPLE
    assert result.inlier_count == 0
    assert not result.refined


def test_estimate_2p2p_minimal_two_plus_two():
    query, problem = clean_problem(63, n_refs=2, per_ref=2)
    result = estimate_2p2p(problem)
    assert result.status is SolveStatus.SUCCESS
    assert result.inlier_count == 4
    assert not result.refined
    assert pose_error(result.pose, query).translation_m < EXACT


def test_estimate_2p1p_single_correspondence_second_reference():
    rng = np.random.default_rng(64)
    query = forward_pose(rng)
    ra, rb = forward_pose(rng), forward_pose(rng)
    while np.linalg.norm(ra.center() - query.center()) < 0.5:
        ra = forward_pose(rng)
    while (
        np.linalg.norm(rb.center() - query.center()) < 0.5
        or np.linalg.norm(rb.center() - ra.center()) < 0.5
    ):
        rb = forward_pose(rng)
    pts = forward_points(rng, 4)
    problem = build_problem(query, [ra, rb], [pts[:3], pts[3:]])
    assert len(problem.references[1].correspondences) == 1
    result = estimate_2p1p(problem)
    assert result.status is SolveStatus.SUCCESS
    assert pose_error(result.pose, query).translation_m < EXACT


def test_estimate_2p1p_beats_8p8p_on_sparse_outlier_scenes():
    # 20 matches over 5 references leaves no reference with the 8 matches the
    # baseline needs, and 60% outliers stress the minimal sampler
    crit = SuccessCriterion(0.1, 1.0)
    usable = {SolveStatus.SUCCESS, SolveStatus.REFINEMENT_WARNING}
    wins_2p1p = 0
    wins_8p8p = 0
    for k in range(100):
        cfg = WorldConfig(n_matches=20, outlier_rate=0.6, n_references=5, seed=k)
        scene = generate(cfg)
        r1 = estimate_2p1p(scene.problem)
        if r1.status in usable and crit.passes(pose_error(r1.pose, scene.ground_truth)):
            wins_2p1p += 1
        try:
            r8 = estimate_8p8p(scene.problem)
        except InsufficientMatches:
            continue
        if r8.status in usable and crit.passes(pose_error(r8.pose, scene.ground_truth)):
            wins_8p8p += 1
    assert wins_2p1p > wins_8p8p
    assert wins_2p1p > 0


def test_classify_inliers_ground_truth_takes_all():
    query, problem = clean_problem(65)
    sets = classify_inliers(query, problem)
    assert [len(s) for s in sets] == [20] * 5
    assert all(s == list(range(20)) for s in sets)


def test_classify_inliers_rejects_exactly_the_corrupted():
    rng = np.random.default_rng(66)
    query, problem = clean_problem(66)
    victims = set(rng.choice(100, size=30, replace=False).tolist())
    corrupted = garbled(problem, rng, victims)
    sets = classify_inliers(query, corrupted)
    got = {j * 20 + i for j, s in enumerate(sets) for i in s}
    assert got == set(range(100)) - victims


def test_classify_inliers_random_pose_nearly_empty():
    rng = np.random.default_rng(67)
    _, problem = clean_problem(67)
    stranger = RigidPose(rotation_y(2.1), np.array([3.0, 0.0, -4.0]))
    sets = classify_inliers(stranger, problem)
    assert sum(len(s) for s in sets) < 5


def test_estimators_are_deterministic():
    rng = np.random.default_rng(68)
    _, problem = clean_problem(68)
    noisy = garbled(problem, rng, victims=set(range(0, 100, 4)))
    for estimate in (estimate_2p2p, estimate_2p1p):
        a = estimate(noisy)
        b = estimate(noisy)
        assert np.array_equal(a.pose.rotation, b.pose.rotation)
        assert np.array_equal(a.pose.translation, b.pose.translation)
        assert a.inlier_sets == b.inlier_sets
        assert a.checks_passed == b.checks_passed
        assert a.status is b.status


def test_check_cascade_counters_are_monotone():
    for seed in range(5):
        cfg = WorldConfig(
            n_matches=50, noise_sigma_px=2.0, outlier_rate=0.3, n_references=5, seed=seed
        )
        scene = generate(cfg)
        for estimate in (estimate_2p2p, estimate_2p1p):
            c = estimate(scene.problem).checks_passed
            assert c.cheirality >= c.rcheck >= c.triangulated >= c.pdcheck >= c.consistency


def test_estimate_2p2p_not_enough_eligible_references():
    rng = np.random.default_rng(69)
    query = forward_pose(rng)
    ra, rb = forward_pose(rng), forward_pose(rng)
    pts = forward_points(rng, 3)
    problem = build_problem(query, [ra, rb], [pts[:2], pts[2:]])
    result = estimate_2p2p(problem)
    assert result.status is SolveStatus.NO_VALID_SAMPLE
    assert result.inlier_count == 0
    assert result.checks_passed.cheirality == 0


def test_adaptive_termination_keeps_exactness():
    query, problem = clean_problem(70, adaptive=True)
    result = estimate_2p2p(problem)
    assert result.status is SolveStatus.SUCCESS
    assert pose_error(result.pose, query).translation_m < EXACT


def test_problem_validation():
    rng = np.random.default_rng(71)
    query = forward_pose(rng)
    ra, rb = forward_pose(rng), forward_pose(rng)
    pts = forward_points(rng, 4)
    with pytest.raises(InvalidProblem):
        build_problem(query, [ra], [pts[:2]])
    with pytest.raises(InvalidProblem):
        build_problem(query, [ra, rb], [pts[:2], pts[2:]], iterations=0)
    mislabeled = ReferenceView(
        ra, (Correspondence((0.1, 0.1), (0.2, 0.2), 1),)
    )
    with pytest.raises(InvalidProblem):
        LocalizationProblem(INTR, (mislabeled, ReferenceView(rb, ())))


def test_thresholds_resolved_at_construction():
    _, problem = clean_problem(72, n_refs=2, per_ref=2)
    assert problem.thresholds.sampson_inlier == 2.5 / 800.0
