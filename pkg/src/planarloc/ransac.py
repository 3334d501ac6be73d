"""Robust query-pose estimation over multiple reference views.

Both planar estimators share one RANSAC shell: draw a minimal sample, build
relative pose candidates with the two-point solver, push them through the
check cascade (cheirality, rotation cross-check, scale recovery, positive
depth, direction consistency), then score survivors by Sampson inlier count
over all correspondences to every reference. The best model is polished with
the damped Gauss-Newton refinement.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .absolute_pose import (
    CheckThresholds,
    ReferenceView,
    ScaleSolution,
    assemble_query_pose,
    consistency_check,
    pdcheck,
    rcheck,
    refine_pose,
    solve_scale_2p1p,
    triangulate_2p2p,
)
from .errors import (
    DegenerateConfiguration,
    DegenerateCorrespondence,
    InvalidProblem,
    NoRealSolution,
    ParallelDirections,
    UndefinedDirection,
)
from .geometry import CameraIntrinsics, RigidPose, skew
from .planar_essential import (
    RelativePoseCandidate,
    ViewArrays,
    angles_from,
    rank_solutions,
    solve_2p,
)


class SolveStatus(Enum):
    SUCCESS = "Success"
    NO_VALID_SAMPLE = "NoValidSample"
    REFINEMENT_WARNING = "RefinementWarning"


@dataclass(frozen=True)
class CheckCounters:
    """How many samples survived each stage of the cascade."""

    cheirality: int = 0
    rcheck: int = 0
    triangulated: int = 0
    pdcheck: int = 0
    consistency: int = 0


@dataclass(frozen=True)
class LocalizationProblem:
    """A query against posed reference views, plus estimator settings."""

    intrinsics: CameraIntrinsics
    references: tuple[ReferenceView, ...]
    thresholds: CheckThresholds = field(default_factory=CheckThresholds)
    iterations: int = 100
    rng_seed: int = 0
    adaptive: bool = False

    def __post_init__(self):
        refs = tuple(self.references)
        if len(refs) < 2:
            raise InvalidProblem("need at least 2 reference views")
        for j, ref in enumerate(refs):
            for corr in ref.correspondences:
                if corr.reference_index != j:
                    raise InvalidProblem(
                        f"correspondence indexed {corr.reference_index} stored in view {j}"
                    )
        if self.iterations < 1:
            raise InvalidProblem("iterations must be positive")
        object.__setattr__(self, "references", refs)
        object.__setattr__(self, "thresholds", self.thresholds.resolved(self.intrinsics))


@dataclass(frozen=True)
class LocalizationResult:
    pose: RigidPose
    inlier_count: int
    inlier_sets: tuple[tuple[int, ...], ...]
    checks_passed: CheckCounters
    refined: bool
    status: SolveStatus


class _ProblemData:
    """Per-call caches: point arrays and inter-reference transforms."""

    def __init__(self, problem: LocalizationProblem):
        self.problem = problem
        self.refs = problem.references
        self.pi = []
        self.pj = []
        for ref in self.refs:
            n = len(ref.correspondences)
            pi = np.ones((n, 3))
            pj = np.ones((n, 3))
            for k, corr in enumerate(ref.correspondences):
                pi[k, 0], pi[k, 1] = corr.query_point
                pj[k, 0], pj[k, 1] = corr.reference_point
            self.pi.append(pi)
            self.pj.append(pj)
        self.counts = [len(r.correspondences) for r in self.refs]
        self.views = [
            ViewArrays.from_columns(pi[:, 0], pi[:, 1], pj[:, 0], pj[:, 1])
            for pi, pj in zip(self.pi, self.pj)
        ]
        self.total = sum(self.counts)
        # voting gate is looser than the inlier threshold: a minimal-sample
        # model is noisier than a refined one, and the vote only needs to
        # silence gross mismatches, not adjudicate borderline points
        self.vote_gate = 4.0 * problem.thresholds.sampson_inlier
        # flattened across references for one-shot candidate scoring
        self.flat_pi = np.concatenate(self.pi) if self.total else np.zeros((0, 3))
        self.flat_pj = np.concatenate(self.pj) if self.total else np.zeros((0, 3))
        self.ref_of = np.repeat(np.arange(len(self.refs)), self.counts)
        self.R_stack = np.stack([r.pose.rotation for r in self.refs])
        self.t_stack = np.stack([r.pose.translation for r in self.refs])
        self._pairs: dict[tuple[int, int], RigidPose] = {}

    def pair(self, a: int, b: int) -> RigidPose:
        """Known transform mapping reference b's frame into reference a's."""
        key = (a, b)
        got = self._pairs.get(key)
        if got is None:
            got = self.refs[a].pose.compose(self.refs[b].pose.inverse())
            self._pairs[key] = got
        return got


def _ref_inlier_mask(data: _ProblemData, j: int, E: np.ndarray, thr: float):
    pi, pj = data.pi[j], data.pj[j]
    gi = pi @ E.T
    gj = pj @ E
    num = np.einsum("ij,ij->i", pj, gi)
    den2 = gi[:, 0] ** 2 + gi[:, 1] ** 2 + gj[:, 0] ** 2 + gj[:, 1] ** 2
    mask = (num * num <= (thr * thr) * den2) & (den2 >= 1e-30)
    return mask, num, den2


def _relative_essential(query_pose: RigidPose, ref_pose: RigidPose) -> np.ndarray:
    R_rel = ref_pose.rotation @ query_pose.rotation.T
    t_rel = ref_pose.translation - R_rel @ query_pose.translation
    return skew(t_rel) @ R_rel


def _score(query_pose: RigidPose, data: _ProblemData, thr: float, best_count: int = -1):
    """Sampson inlier count and residual sum over every correspondence.

    Small problems take a single stacked pass (per-numpy-op overhead wins);
    large ones loop references with plain matmuls per block and abandon as
    soon as the remaining blocks cannot reach best_count (returned count -1
    then means "strictly worse than the incumbent").
    """
    R_rel = data.R_stack @ query_pose.rotation.T
    t_rel = data.t_stack - R_rel @ query_pose.translation
    S = np.zeros((len(data.refs), 3, 3))
    S[:, 0, 1] = -t_rel[:, 2]
    S[:, 0, 2] = t_rel[:, 1]
    S[:, 1, 0] = t_rel[:, 2]
    S[:, 1, 2] = -t_rel[:, 0]
    S[:, 2, 0] = -t_rel[:, 1]
    S[:, 2, 1] = t_rel[:, 0]
    E_stack = S @ R_rel
    thr2 = thr * thr
    if data.total <= 200:
        E = E_stack[data.ref_of]
        gi = np.einsum("tkj,tj->tk", E, data.flat_pi)
        gj = np.einsum("tjk,tj->tk", E, data.flat_pj)
        num = np.einsum("tk,tk->t", data.flat_pj, gi)
        den2 = gi[:, 0] ** 2 + gi[:, 1] ** 2 + gj[:, 0] ** 2 + gj[:, 1] ** 2
        mask = (num * num <= thr2 * den2) & (den2 >= 1e-30)
        count = int(mask.sum())
        if not count:
            return 0, 0.0
        return count, float((np.abs(num[mask]) / np.sqrt(den2[mask])).sum())
    count = 0
    remaining = data.total
    blocks = []
    for j, (pi, pj) in enumerate(zip(data.pi, data.pj)):
        remaining -= data.counts[j]
        if not data.counts[j]:
            continue
        E = E_stack[j]
        gi = pi @ E.T
        gj = pj @ E
        num = np.einsum("ij,ij->i", pj, gi)
        den2 = gi[:, 0] ** 2 + gi[:, 1] ** 2 + gj[:, 0] ** 2 + gj[:, 1] ** 2
        mask = (num * num <= thr2 * den2) & (den2 >= 1e-30)
        c = int(mask.sum())
        if c:
            count += c
            blocks.append((num, den2, mask))
        if count + remaining < best_count:
            return -1, math.inf
    if count < best_count or not count:
        # the residual sum only breaks count ties, so losers skip it
        return count, 0.0
    rsum = 0.0
    for num, den2, mask in blocks:
        rsum += float((np.abs(num[mask]) / np.sqrt(den2[mask])).sum())
    return count, rsum


def classify_inliers(pose: RigidPose, problem: LocalizationProblem) -> list[list[int]]:
    """Per-reference inlier index lists under the Sampson threshold."""
    return _classify(pose, _ProblemData(problem))


def _classify(pose: RigidPose, data: _ProblemData) -> list[list[int]]:
    thr = data.problem.thresholds.sampson_inlier
    sets = []
    for j in range(len(data.refs)):
        if data.counts[j] == 0:
            sets.append([])
            continue
        E = _relative_essential(pose, data.refs[j].pose)
        mask, _, _ = _ref_inlier_mask(data, j, E, thr)
        sets.append(np.flatnonzero(mask).tolist())
    return sets


def _two_distinct(rng, n: int) -> tuple[int, int]:
    i = int(rng.integers(n))
    j = int(rng.integers(n - 1))
    if j >= i:
        j += 1
    return i, j


def _solve_view(data: _ProblemData, j: int, k1: int, k2: int) -> tuple[RelativePoseCandidate, ...]:
    """Two-point solve against view j, ranked over the view's matches.

    Both quadric roots reproduce the sampled pair essentially exactly, so the
    cheirality vote runs over all of the view's correspondences; only matches
    that roughly fit the candidate's epipolar geometry may vote, since gross
    mismatches cast incoherent votes that can drown out a thin inlier set.
    Every candidate the vote cannot rule out is returned, best first.
    """
    ref = data.refs[j]
    try:
        solutions = solve_2p(ref.correspondences[k1], ref.correspondences[k2])
    except (DegenerateConfiguration, NoRealSolution):
        return ()
    if not solutions:
        return ()
    ranked = rank_solutions(solutions, data.views[j], data.vote_gate)
    return tuple(RelativePoseCandidate.from_angles(*angles_from(s)) for s in ranked)


class _Counters:
    __slots__ = ("cheirality", "rcheck", "triangulated", "pdcheck", "consistency")

    def __init__(self):
        self.cheirality = 0
        self.rcheck = 0
        self.triangulated = 0
        self.pdcheck = 0
        self.consistency = 0

    def frozen(self) -> CheckCounters:
        return CheckCounters(
            self.cheirality, self.rcheck, self.triangulated, self.pdcheck, self.consistency
        )


def _run_ransac(problem: LocalizationProblem, minimal_fn, sample_size: int) -> LocalizationResult:
    data = _ProblemData(problem)
    rng = np.random.default_rng(problem.rng_seed)
    counters = _Counters()
    thr = problem.thresholds.sampson_inlier
    best_pose = None
    best_count = -1
    best_mean = math.inf
    max_it = problem.iterations
    it = 0
    while it < max_it:
        it += 1
        pose = minimal_fn(rng, data, counters)
        if pose is None:
            continue
        count, rsum = _score(pose, data, thr, best_count)
        mean = rsum / count if count > 0 else math.inf
        if count > best_count or (count == best_count and mean < best_mean):
            best_pose, best_count, best_mean = pose, count, mean
        if problem.adaptive and best_count > 0 and data.total > 0:
            w = best_count / data.total
            p_good = w**sample_size
            if p_good >= 1.0:
                break
            if p_good > 1e-12:
                needed = math.ceil(math.log(0.01) / math.log(1.0 - p_good))
                max_it = min(max_it, max(needed, 1))
    if best_pose is None:
        return LocalizationResult(
            pose=RigidPose.identity(),
            inlier_count=0,
            inlier_sets=tuple(() for _ in data.refs),
            checks_passed=counters.frozen(),
            refined=False,
            status=SolveStatus.NO_VALID_SAMPLE,
        )
    sets = _classify(best_pose, data)
    count = sum(len(s) for s in sets)
    refined = False
    status = SolveStatus.SUCCESS
    pose = best_pose
    if count >= 6:
        result = refine_pose(best_pose, problem, sets)
        pose = result.pose
        refined = True
        if not result.converged:
            status = SolveStatus.REFINEMENT_WARNING
    return LocalizationResult(
        pose=pose,
        inlier_count=count,
        inlier_sets=tuple(tuple(s) for s in sets),
        checks_passed=counters.frozen(),
        refined=refined,
        status=status,
    )


def _minimal_2p2p(elig, thr_rot, thr_dir):
    # a sparse view may leave several essential-matrix candidates standing
    # after the cheirality vote; every cross-view combination gets its shot
    # at the later gates, and the counters record the deepest stage any
    # combination of the sample reached
    def draw(rng, data: _ProblemData, counters: _Counters):
        ea, eb = _two_distinct(rng, len(elig))
        a, b = elig[ea], elig[eb]
        ka1, ka2 = _two_distinct(rng, data.counts[a])
        kb1, kb2 = _two_distinct(rng, data.counts[b])
        cands_a = _solve_view(data, a, ka1, ka2)
        if not cands_a:
            return None
        cands_b = _solve_view(data, b, kb1, kb2)
        if not cands_b:
            return None
        counters.cheirality += 1
        t_ab = data.pair(a, b)
        stage = 0
        pose = None
        for cand_a in cands_a:
            rel_a = cand_a.to_rigid()
            for cand_b in cands_b:
                rel_b = cand_b.to_rigid()
                ok, _ = rcheck(rel_a, rel_b, t_ab, thr_rot)
                if not ok:
                    continue
                stage = max(stage, 1)
                try:
                    sol = triangulate_2p2p(rel_a, rel_b, t_ab, data.refs[a].pose)
                except ParallelDirections:
                    continue
                stage = max(stage, 2)
                if not pdcheck(sol):
                    continue
                stage = max(stage, 3)
                try:
                    ok_a, _ = consistency_check(
                        sol.query_pose, data.refs[a], cand_a.direction, thr_dir
                    )
                    ok_b, _ = consistency_check(
                        sol.query_pose, data.refs[b], cand_b.direction, thr_dir
                    )
                except UndefinedDirection:
                    continue
                if not (ok_a and ok_b):
                    continue
                stage = 4
                pose = sol.query_pose
                break
            if pose is not None:
                break
        if stage >= 1:
            counters.rcheck += 1
        if stage >= 2:
            counters.triangulated += 1
        if stage >= 3:
            counters.pdcheck += 1
        if stage >= 4:
            counters.consistency += 1
        return pose

    return draw


def _minimal_2p1p(elig2, elig1, thr_dir):
    def draw(rng, data: _ProblemData, counters: _Counters):
        a = elig2[int(rng.integers(len(elig2)))]
        others = [j for j in elig1 if j != a]
        b = others[int(rng.integers(len(others)))]
        ka1, ka2 = _two_distinct(rng, data.counts[a])
        kb = int(rng.integers(data.counts[b]))
        cands_a = _solve_view(data, a, ka1, ka2)
        if not cands_a:
            return None
        counters.cheirality += 1
        # the relative rotation to view b is implied by composition, so the
        # rotation cross-check carries no information here; count it as passed
        counters.rcheck += 1
        t_ba = data.pair(b, a)
        stage = 0
        pose = None
        for cand_a in cands_a:
            rel_a = cand_a.to_rigid()
            try:
                rho = solve_scale_2p1p(rel_a, t_ba, data.refs[b].correspondences[kb])
            except DegenerateCorrespondence:
                continue
            stage = max(stage, 1)
            sol = ScaleSolution(rho, None, assemble_query_pose(rel_a, rho, data.refs[a].pose))
            if not pdcheck(sol):
                continue
            stage = max(stage, 2)
            try:
                ok_a, _ = consistency_check(
                    sol.query_pose, data.refs[a], cand_a.direction, thr_dir
                )
            except UndefinedDirection:
                continue
            if not ok_a:
                continue
            stage = 3
            pose = sol.query_pose
            break
        if stage >= 1:
            counters.triangulated += 1
        if stage >= 2:
            counters.pdcheck += 1
        if stage >= 3:
            counters.consistency += 1
        return pose

    return draw


def _empty_result(problem: LocalizationProblem) -> LocalizationResult:
    return LocalizationResult(
        pose=RigidPose.identity(),
        inlier_count=0,
        inlier_sets=tuple(() for _ in problem.references),
        checks_passed=CheckCounters(),
        refined=False,
        status=SolveStatus.NO_VALID_SAMPLE,
    )


def estimate_2p2p(problem: LocalizationProblem) -> LocalizationResult:
    """Two points against each of two reference views."""
    elig = [j for j, r in enumerate(problem.references) if len(r.correspondences) >= 2]
    if len(elig) < 2:
        return _empty_result(problem)
    thr = problem.thresholds
    return _run_ransac(problem, _minimal_2p2p(elig, thr.rcheck_deg, thr.consistency_deg), 4)


def estimate_2p1p(problem: LocalizationProblem) -> LocalizationResult:
    """Two points against one reference view plus one against another."""
    elig2 = [j for j, r in enumerate(problem.references) if len(r.correspondences) >= 2]
    elig1 = [j for j, r in enumerate(problem.references) if len(r.correspondences) >= 1]
    if not elig2 or len(elig1) < 2:
        return _empty_result(problem)
    thr = problem.thresholds
    return _run_ransac(problem, _minimal_2p1p(elig2, elig1, thr.consistency_deg), 3)
