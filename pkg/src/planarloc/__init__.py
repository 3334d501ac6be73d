"""Visual localization under planar motion, without a 3D model.

A query camera moving on the ground plane is localized directly against
posed reference views using 2D-2D feature matches. Two minimal solvers
share a two-point relative pose core: one triangulates scale from a second
reference pair (2p2p), the other transfers scale through a single extra
match (2p1p). A generalized eight-point baseline (8p8p) and a synthetic
scene generator round out the benchmark harness.
"""

from .absolute_pose import (
    CheckThresholds,
    ReferenceView,
    ScaleSolution,
    consistency_check,
    pdcheck,
    rcheck,
    refine_pose,
    solve_scale_2p1p,
    triangulate_2p2p,
)
from .baseline import estimate_8p8p, solve_8pt
from .errors import (
    CheiralityAmbiguous,
    DegenerateConfiguration,
    DegenerateCorrespondence,
    DegenerateMotion,
    EmptyInput,
    InfeasibleScene,
    InsufficientMatches,
    InvalidProblem,
    LocalizationError,
    NoRealSolution,
    ParallelDirections,
    ParseError,
    SchemaVersionMismatch,
    UndefinedDirection,
)
from .experiments import (
    ExperimentKind,
    ExperimentPlan,
    run,
    run_accuracy,
    run_robustness,
    run_timing,
)
from .geometry import (
    CameraIntrinsics,
    Correspondence,
    EssentialMatrix,
    PlanarPose,
    RigidPose,
    essential_from_planar,
    essential_from_pose,
    planar_to_rigid,
    rotation_y,
)
from .metrics import PoseError, SuccessCriterion, mean_errors, pose_error, success_rate
from .planar_essential import (
    RelativePoseCandidate,
    TrigSolution,
    rank_solutions,
    select_solution,
    solve_2p,
)
from .problem_io import (
    LoadedProblem,
    TrialRecord,
    read_problem,
    read_records,
    write_problem,
    write_records,
)
from .ransac import (
    CheckCounters,
    LocalizationProblem,
    LocalizationResult,
    SolveStatus,
    classify_inliers,
    estimate_2p1p,
    estimate_2p2p,
)
from .synthetic import SyntheticScene, WorldConfig, corrupt, generate

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "CheckCounters",
    "CheckThresholds",
    "CheiralityAmbiguous",
    "Correspondence",
    "DegenerateConfiguration",
    "DegenerateCorrespondence",
    "DegenerateMotion",
    "EmptyInput",
    "EssentialMatrix",
    "ExperimentKind",
    "ExperimentPlan",
    "InfeasibleScene",
    "InsufficientMatches",
    "InvalidProblem",
    "LoadedProblem",
    "LocalizationError",
    "LocalizationProblem",
    "LocalizationResult",
    "NoRealSolution",
    "ParallelDirections",
    "ParseError",
    "PlanarPose",
    "PoseError",
    "ReferenceView",
    "RelativePoseCandidate",
    "RigidPose",
    "ScaleSolution",
    "SchemaVersionMismatch",
    "SolveStatus",
    "SuccessCriterion",
    "SyntheticScene",
    "TrialRecord",
    "TrigSolution",
    "UndefinedDirection",
    "WorldConfig",
    "classify_inliers",
    "consistency_check",
    "corrupt",
    "essential_from_planar",
    "essential_from_pose",
    "estimate_2p1p",
    "estimate_2p2p",
    "estimate_8p8p",
    "generate",
    "mean_errors",
    "pdcheck",
    "planar_to_rigid",
    "pose_error",
    "rank_solutions",
    "rcheck",
    "read_problem",
    "read_records",
    "refine_pose",
    "rotation_y",
    "run",
    "run_accuracy",
    "run_robustness",
    "run_timing",
    "select_solution",
    "solve_2p",
    "solve_8pt",
    "solve_scale_2p1p",
    "success_rate",
    "triangulate_2p2p",
    "write_problem",
    "write_records",
]
