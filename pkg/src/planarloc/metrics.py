"""Pose error metrics and success-rate accounting.

Rotation error uses the geodesic angle of the relative rotation, reported in
degrees; translation error is the Euclidean norm of the translation
difference; direction error is the angle between the estimated and
ground-truth translation directions.
"""

import math
from dataclasses import dataclass

from .errors import EmptyInput
from .geometry import RigidPose, angle_between_deg, rotation_angle_deg


@dataclass(frozen=True)
class PoseError:
    """Error triple of one localization attempt; angles in [0, 180]."""

    rotation_deg: float
    translation_m: float
    direction_deg: float

    def __post_init__(self):
        if self.rotation_deg < 0.0 or self.rotation_deg > 180.0:
            raise ValueError("rotation_deg outside [0, 180]")
        if self.direction_deg < 0.0 or self.direction_deg > 180.0:
            raise ValueError("direction_deg outside [0, 180]")
        if self.translation_m < 0.0:
            raise ValueError("translation_m negative")


@dataclass(frozen=True)
class SuccessCriterion:
    """Both bounds must hold simultaneously for a trial to count."""

    max_translation_m: float
    max_rotation_deg: float

    def __post_init__(self):
        if self.max_translation_m <= 0.0 or self.max_rotation_deg <= 0.0:
            raise ValueError("criterion bounds must be positive")

    def passes(self, err: PoseError) -> bool:
        return (
            err.translation_m < self.max_translation_m
            and err.rotation_deg < self.max_rotation_deg
        )


def pose_error(estimate: RigidPose, truth: RigidPose) -> PoseError:
    """Rotation, translation, and direction errors of an estimated pose.

    The direction error is defined as 0 when either translation has norm
    below 1e-12 (the direction of a zero vector carries no information).
    """
    rot = rotation_angle_deg(estimate.rotation, truth.rotation)
    diff = estimate.translation - truth.translation
    trans = math.sqrt(float(diff @ diff))
    t_est = estimate.translation
    t_gt = truth.translation
    if (
        math.sqrt(float(t_gt @ t_gt)) < 1e-12
        or math.sqrt(float(t_est @ t_est)) < 1e-12
    ):
        direction = 0.0
    else:
        direction = angle_between_deg(t_est, t_gt)
    return PoseError(rot, trans, direction)


def success_rate(errors, criterion: SuccessCriterion) -> float:
    """Fraction of trials meeting the criterion; EmptyInput on no trials."""
    errors = list(errors)
    if not errors:
        raise EmptyInput("no errors to aggregate")
    return sum(1 for e in errors if criterion.passes(e)) / len(errors)


def mean_errors(errors) -> PoseError:
    """Componentwise mean of a nonempty error collection."""
    errors = list(errors)
    if not errors:
        raise EmptyInput("no errors to aggregate")
    n = len(errors)
    return PoseError(
        sum(e.rotation_deg for e in errors) / n,
        sum(e.translation_m for e in errors) / n,
        sum(e.direction_deg for e in errors) / n,
    )
