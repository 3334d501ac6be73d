"""Minimal two-point relative pose under planar motion.

Each correspondence contributes one linear constraint on the trigonometric
vector x = [sin(theta-phi), cos(theta-phi), sin(phi), cos(phi)]. Two
correspondences give a 2x4 system whose 2D kernel, intersected with the two
unit-circle constraints x1^2+x2^2 = 1 and x3^2+x4^2 = 1, yields up to four
discrete solutions. Positive-depth (cheirality) voting then picks the
physically valid relative pose.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import CheiralityAmbiguous, DegenerateConfiguration, NoRealSolution
from .geometry import Correspondence, rotation_y, wrap_angle, RigidPose

_RANK_RTOL = 1e-10
_ROOT_IMAG_RTOL = 1e-10
_CIRCLE_TOL = 1e-9
_ROW_TOL = 1e-9


@dataclass(frozen=True)
class TrigSolution:
    """One root of the two-point system.

    Components are (sin(theta-phi), cos(theta-phi), sin(phi), cos(phi));
    both pairs must lie on the unit circle within 1e-9.
    """

    x1: float
    x2: float
    x3: float
    x4: float

    def __post_init__(self):
        if abs(self.x1 * self.x1 + self.x2 * self.x2 - 1.0) > _CIRCLE_TOL:
            raise ValueError("(x1, x2) not on the unit circle")
        if abs(self.x3 * self.x3 + self.x4 * self.x4 - 1.0) > _CIRCLE_TOL:
            raise ValueError("(x3, x4) not on the unit circle")

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3, self.x4])


@dataclass(frozen=True)
class RelativePoseCandidate:
    """Planar relative pose with a unit translation direction."""

    theta: float
    phi: float
    direction: np.ndarray

    @staticmethod
    def from_angles(theta: float, phi: float) -> "RelativePoseCandidate":
        d = theta - phi
        direction = np.array([math.sin(d), 0.0, -math.cos(d)])
        direction.flags.writeable = False
        return RelativePoseCandidate(wrap_angle(theta), wrap_angle(phi), direction)

    def to_rigid(self, scale: float = 1.0) -> RigidPose:
        return RigidPose._trusted(rotation_y(self.theta), scale * self.direction)


def build_constraint_row(corr: Correspondence) -> np.ndarray:
    """Coefficient row (a, b, c, d) of one epipolar constraint on x."""
    ui, vi = corr.query_point
    uj, vj = corr.reference_point
    return np.array([vi, vi * uj, vj, -ui * vj])


def angles_from(solution: TrigSolution) -> tuple[float, float]:
    """Recover (theta, phi), both wrapped to (-pi, pi]."""
    phi = math.atan2(solution.x3, solution.x4)
    theta = wrap_angle(math.atan2(solution.x1, solution.x2) + phi)
    return theta, phi


def _kernel_basis(row_a, row_b):
    """Orthonormal basis of the null space of the 2x4 constraint matrix.

    Householder QR of the transposed matrix; the trailing two columns of Q
    span the kernel. An order of magnitude faster than a general SVD at this
    size, and the rank gate on the R diagonal plays the same role as one on
    the singular values. Everything is kept in plain floats; this sits on
    the innermost RANSAC path.

    Raises DegenerateConfiguration when the two rows are (nearly) parallel.
    """
    a0, a1, a2, a3 = row_a
    na = math.sqrt(a0 * a0 + a1 * a1 + a2 * a2 + a3 * a3)
    if na < 1e-15:
        raise DegenerateConfiguration("constraint matrix is rank-deficient")
    w0 = a0 + math.copysign(na, a0)
    beta1 = 2.0 / (w0 * w0 + a1 * a1 + a2 * a2 + a3 * a3)

    b0, b1, b2, b3 = row_b
    s1 = beta1 * (w0 * b0 + a1 * b1 + a2 * b2 + a3 * b3)
    b1, b2, b3 = b1 - s1 * a1, b2 - s1 * a2, b3 - s1 * a3
    nb = math.sqrt(b1 * b1 + b2 * b2 + b3 * b3)
    if nb <= _RANK_RTOL * na:
        raise DegenerateConfiguration("constraint matrix is rank-deficient")
    u1 = b1 + math.copysign(nb, b1)
    beta2 = 2.0 / (u1 * u1 + b2 * b2 + b3 * b3)

    basis = []
    for k in (2, 3):
        # q = H1 @ H2 @ e_k with H = I - beta v v^T
        qk = (b2, b3)[k - 2]
        s2 = beta2 * qk
        q0, q1, q2, q3 = 0.0, -s2 * u1, -s2 * b2, -s2 * b3
        if k == 2:
            q2 += 1.0
        else:
            q3 += 1.0
        s1 = beta1 * (w0 * q0 + a1 * q1 + a2 * q2 + a3 * q3)
        basis.append((q0 - s1 * w0, q1 - s1 * a1, q2 - s1 * a2, q3 - s1 * a3))
    return basis[0], basis[1]


def _quadric_directions(al: float, be: float, ga: float, scale: float):
    """Directions (l1, l2) with al*l1^2 + 2*be*l1*l2 + ga*l2^2 = 0."""
    if max(abs(al), abs(be), abs(ga)) <= 1e-14 * max(scale, 1e-300):
        raise DegenerateConfiguration("unit-circle difference vanishes identically")
    disc = be * be - al * ga
    if disc < 0.0:
        # near-real complex pair: accept as a double root when tiny
        if math.sqrt(-disc) >= _ROOT_IMAG_RTOL * abs(be):
            raise NoRealSolution("ratio roots are complex")
        disc = 0.0
    sq = math.sqrt(disc)
    q = -(be + math.copysign(sq, be))
    dirs = []
    for v1, v2 in ((q, al), (ga, q)):
        n = math.hypot(v1, v2)
        if n < 1e-150:
            continue
        v1, v2 = v1 / n, v2 / n
        if not any(abs(v1 * w1 + v2 * w2) > 1.0 - 1e-12 for w1, w2 in dirs):
            dirs.append((v1, v2))
    return dirs


def solve_2p(corr_a: Correspondence, corr_b: Correspondence) -> list[TrigSolution]:
    """Solve the two-point planar relative pose system.

    Returns 0-4 TrigSolutions; the set is closed under sign flip, which
    corresponds to negating the translation direction of the same rotation.

    Raises:
        DegenerateConfiguration: constraint matrix has rank < 2.
        NoRealSolution: the ratio quadratic has only complex roots.
        ValueError: the correspondences target different reference views.
    """
    if corr_a.reference_index != corr_b.reference_index:
        raise ValueError("correspondences must reference the same view")
    ua, va = corr_a.query_point
    wa, za = corr_a.reference_point
    ub, vb = corr_b.query_point
    wb, zb = corr_b.reference_point
    row_a = (va, va * wa, za, -ua * za)
    row_b = (vb, vb * wb, zb, -ub * zb)
    X1, X2 = _kernel_basis(row_a, row_b)

    # Gram matrices of the kernel basis restricted to the two circle pairs
    m11 = X1[0] * X1[0] + X1[1] * X1[1]
    m12 = X1[0] * X2[0] + X1[1] * X2[1]
    m22 = X2[0] * X2[0] + X2[1] * X2[1]
    n11 = X1[2] * X1[2] + X1[3] * X1[3]
    n12 = X1[2] * X2[2] + X1[3] * X2[3]
    n22 = X2[2] * X2[2] + X2[3] * X2[3]

    solutions: list[TrigSolution] = []
    scale = max(m11, m22, n11, n22)
    for l1, l2 in _quadric_directions(m11 - n11, m12 - n12, m22 - n22, scale):
        g = l1 * l1 * m11 + 2.0 * l1 * l2 * m12 + l2 * l2 * m22
        if g <= 1e-20:
            continue
        m = 1.0 / math.sqrt(g)
        x = [m * (l1 * X1[k] + l2 * X2[k]) for k in range(4)]
        if abs(x[0] * x[0] + x[1] * x[1] - 1.0) > _CIRCLE_TOL:
            continue
        if abs(x[2] * x[2] + x[3] * x[3] - 1.0) > _CIRCLE_TOL:
            continue
        ra = row_a[0] * x[0] + row_a[1] * x[1] + row_a[2] * x[2] + row_a[3] * x[3]
        rb = row_b[0] * x[0] + row_b[1] * x[1] + row_b[2] * x[2] + row_b[3] * x[3]
        if abs(ra) > _ROW_TOL or abs(rb) > _ROW_TOL:
            continue
        solutions.append(TrigSolution(x[0], x[1], x[2], x[3]))
        solutions.append(TrigSolution(-x[0], -x[1], -x[2], -x[3]))
    return solutions


@dataclass(frozen=True)
class ViewArrays:
    """Match coordinate columns of one view, with cached depth-vote terms."""

    ui: np.ndarray
    vi: np.ndarray
    uj: np.ndarray
    vj: np.ndarray
    a11: np.ndarray
    vjvj: np.ndarray
    vivj: np.ndarray

    @staticmethod
    def from_columns(ui, vi, uj, vj) -> "ViewArrays":
        return ViewArrays(ui, vi, uj, vj, ui * ui + vi * vi + 1.0, vj * vj, vi * vj)


def _signed_depth_counts(roots, va: ViewArrays, gate: float | None = None) -> np.ndarray:
    """Positive-depth votes for each root under both translation signs.

    Negating a TrigSolution keeps the rotation and flips the translation,
    which negates both triangulated midpoint depths, so one linear solve
    scores the + and - sign of every root. Returns (2K,) counts interleaved
    [root0+, root0-, root1+, ...]. Division-free: the normal-equation
    determinant is a Gram determinant, hence nonnegative, and sign tests
    are multiplied through by it.

    With a gate, only matches whose Sampson residual against the root's
    essential matrix stays below it may vote; gross outliers otherwise cast
    incoherent votes that can drown out a thin inlier set. The residual is
    sign-invariant, so the gate applies to both translation signs alike.
    """
    x1 = np.array([s.x1 for s in roots])[:, None]
    x2 = np.array([s.x2 for s in roots])[:, None]
    x3 = np.array([s.x3 for s in roots])[:, None]
    x4 = np.array([s.x4 for s in roots])[:, None]
    st = x1 * x4 + x2 * x3
    ct = x2 * x4 - x1 * x3
    cx, cz, tz = x3, x4, -x2

    d2x = ct * va.uj + st
    d2z = ct - st * va.uj
    p = va.ui * d2x + va.vivj + d2z
    a22 = d2x * d2x + va.vjvj + d2z * d2z
    b1 = va.ui * cx + cz
    b2 = -(d2x * cx + d2z * cz)
    det = va.a11 * a22 - p * p
    ok = det >= 1e-15
    s = b1 * a22 + b2 * p
    u = va.a11 * b2 + b1 * p
    mz = s + cz * det + u * d2z
    zr = u + s * (st * va.ui + ct) + tz * det
    if gate is not None:
        gi0 = x2 * va.vi
        gi1 = x3 - x4 * va.ui
        gi2 = x1 * va.vi
        gj0 = -x4 * va.vj
        gj1 = x2 * va.uj + x1
        num = va.uj * gi0 + va.vj * gi1 + gi2
        den2 = gi0 * gi0 + gi1 * gi1 + gj0 * gj0 + gj1 * gj1
        ok = ok & (num * num <= (gate * gate) * den2) & (den2 >= 1e-30)
    counts = np.empty(2 * len(roots), dtype=np.intp)
    counts[0::2] = (ok & (mz > 0.0) & (zr > 0.0)).sum(axis=1)
    counts[1::2] = (ok & (mz < 0.0) & (zr < 0.0)).sum(axis=1)
    return counts


def _root_residuals(roots, va: ViewArrays) -> np.ndarray:
    """Mean Sampson residual per root; sign twins share the value exactly."""
    x1 = np.array([s.x1 for s in roots])[:, None]
    x2 = np.array([s.x2 for s in roots])[:, None]
    x3 = np.array([s.x3 for s in roots])[:, None]
    x4 = np.array([s.x4 for s in roots])[:, None]
    gi0 = x2 * va.vi
    gi1 = x3 - x4 * va.ui
    gi2 = x1 * va.vi
    gj0 = -x4 * va.vj
    gj1 = x2 * va.uj + x1
    num = va.uj * gi0 + va.vj * gi1 + gi2
    den = np.sqrt(gi0 * gi0 + gi1 * gi1 + gj0 * gj0 + gj1 * gj1)
    bad = (den < 1e-15).any(axis=1)
    den = np.where(den < 1e-15, 1.0, den)
    return np.where(bad, np.inf, (np.abs(num) / den).mean(axis=1))


def select_solution(solutions, va: ViewArrays, gate: float | None = None):
    """Cheirality vote over a solve_2p solution list (adjacent sign pairs).

    Same decision rule as select_among with one scoring pass shared by the
    two signs of each root: most positive-depth votes wins, count ties fall
    back to mean Sampson residual, irreducible ties return None. An optional
    gate restricts voting to matches within that Sampson residual of the
    candidate, keeping outliers from outvoting a thin inlier set.
    """
    roots = solutions[0::2]
    counts = _signed_depth_counts(roots, va, gate)
    best = counts.max()
    top = np.flatnonzero(counts == best)
    if len(top) == 1:
        return solutions[top[0]]
    res = np.repeat(_root_residuals(roots, va), 2)
    order = top[np.argsort(res[top], kind="stable")]
    r0, r1 = res[order[0]], res[order[1]]
    if (math.isinf(r0) and math.isinf(r1)) or abs(r0 - r1) <= 1e-12:
        return None
    return solutions[order[0]]


def rank_solutions(solutions, va: ViewArrays, gate: float | None = None):
    """All cheirality-plausible solutions, strongest vote first.

    Both quadric roots reproduce the sampled pair exactly, so a view with few
    other trustworthy matches cannot always single one out; downstream
    cross-view gates can. Returns every solution whose positive-depth vote
    count equals its sign twin's or beats it (a tie between signs means the
    view cannot orient the translation either), ordered by count descending
    with mean Sampson residual as the tiebreak. Solutions with zero votes are
    dropped; the result may be empty.
    """
    roots = solutions[0::2]
    counts = _signed_depth_counts(roots, va, gate)
    keep = []
    for k in range(len(roots)):
        cp, cm = counts[2 * k], counts[2 * k + 1]
        if cp >= cm and cp > 0:
            keep.append((2 * k, cp))
        if cm >= cp and cm > 0:
            keep.append((2 * k + 1, cm))
    if len(keep) <= 1:
        return tuple(solutions[i] for i, _ in keep)
    res = np.repeat(_root_residuals(roots, va), 2)
    keep.sort(key=lambda e: (-e[1], res[e[0]]))
    return tuple(solutions[i] for i, _ in keep)


def _batch_scores(candidates, ui, vi, uj, vj):
    """Positive-depth counts and mean Sampson residuals, all candidates at once.

    Depth voting midpoint-triangulates every match at unit baseline and
    requires positive depth in both views; matches whose triangulation
    normal equations are singular do not vote. Point arrays have shape (N,),
    candidate axes broadcast as (K, 1).
    """
    theta = np.array([c.theta for c in candidates])
    phi = np.array([c.phi for c in candidates])
    tz = np.array([c.direction[2] for c in candidates])[:, None]
    ct, st = np.cos(theta)[:, None], np.sin(theta)[:, None]
    # reference camera center in the query frame is (sin(phi), 0, cos(phi))
    cx, cz = np.sin(phi)[:, None], np.cos(phi)[:, None]

    d2x = ct * uj + st
    d2z = ct - st * uj
    a11 = ui * ui + vi * vi + 1.0
    a12 = -(ui * d2x + vi * vj + d2z)
    a22 = d2x * d2x + vj * vj + d2z * d2z
    b1 = ui * cx + cz
    b2 = -(d2x * cx + d2z * cz)
    det = a11 * a22 - a12 * a12
    ok = np.abs(det) >= 1e-15
    det = np.where(ok, det, 1.0)
    s = (b1 * a22 - b2 * a12) / det
    u = (a11 * b2 - a12 * b1) / det
    mx = 0.5 * (s * ui + cx + u * d2x)
    mz = 0.5 * (s + cz + u * d2z)
    z_ref = st * mx + ct * mz + tz
    counts = (ok & (mz > 0.0) & (z_ref > 0.0)).sum(axis=1)

    d = (theta - phi)[:, None]
    e01, e21 = np.cos(d), np.sin(d)
    e10, e12 = -np.cos(phi)[:, None], np.sin(phi)[:, None]
    gi0 = e01 * vi
    gi1 = e10 * ui + e12
    gi2 = e21 * vi
    gj0 = e10 * vj
    gj1 = e01 * uj + e21
    num = uj * gi0 + vj * gi1 + gi2
    den = np.sqrt(gi0 * gi0 + gi1 * gi1 + gj0 * gj0 + gj1 * gj1)
    degenerate = (den < 1e-15).any(axis=1)
    den = np.where(den < 1e-15, 1.0, den)
    residuals = np.where(degenerate, np.inf, (np.abs(num) / den).mean(axis=1))
    return counts, residuals


def select_among(candidates, ui, vi, uj, vj):
    """Cheirality vote over point arrays; None when irreducibly ambiguous.

    The candidate triangulating the most points in front of both views wins;
    count ties fall back to the lower mean Sampson residual; residual ties
    within 1e-12 (or two infinities) are ambiguous.
    """
    if len(candidates) == 1:
        return candidates[0]
    counts, residuals = _batch_scores(candidates, ui, vi, uj, vj)
    best_count = counts.max()
    top = np.flatnonzero(counts == best_count)
    if len(top) == 1:
        return candidates[top[0]]
    order = top[np.argsort(residuals[top], kind="stable")]
    r0, r1 = residuals[order[0]], residuals[order[1]]
    if (math.isinf(r0) and math.isinf(r1)) or abs(r0 - r1) <= 1e-12:
        return None
    return candidates[order[0]]


def cheirality_select(candidates, matches) -> RelativePoseCandidate:
    """Pick the candidate triangulating the most matches in front of both views.

    Ties on the positive-depth count are broken by the lower mean Sampson
    residual. Raises CheiralityAmbiguous when the top two candidates tie on
    both the count and (within 1e-12) the residual.
    """
    candidates = list(candidates)
    matches = list(matches)
    if not candidates:
        raise ValueError("no candidates")
    if not matches:
        raise ValueError("no matches")
    qi = np.array([m.query_point for m in matches])
    qj = np.array([m.reference_point for m in matches])
    picked = select_among(candidates, qi[:, 0], qi[:, 1], qj[:, 0], qj[:, 1])
    if picked is None:
        raise CheiralityAmbiguous("top candidates tie on depth count and residual")
    return picked
