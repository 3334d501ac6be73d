"""Exception types raised across the package.

Solvers raise subclasses of LocalizationError for geometric failures that a
caller may want to catch individually (for example inside a RANSAC loop where
a degenerate sample is routine, not fatal).
"""


class LocalizationError(Exception):
    """Base class for all package-specific errors."""


class DegenerateMotion(LocalizationError):
    """Planar motion with no usable translation (rho <= 0)."""


class DegenerateConfiguration(LocalizationError):
    """Input correspondences are rank-deficient or otherwise unusable."""


class NoRealSolution(LocalizationError):
    """Polynomial root finding produced only complex roots."""


class CheiralityAmbiguous(LocalizationError):
    """Positive-depth voting cannot separate the top two candidates."""


class ParallelDirections(LocalizationError):
    """Scale triangulation directions are parallel; scales unobservable."""


class UndefinedDirection(LocalizationError):
    """Camera centers coincide; relative direction undefined."""


class DegenerateCorrespondence(LocalizationError):
    """Single-correspondence scale equation has a vanishing coefficient."""


class InsufficientMatches(LocalizationError):
    """Not enough correspondences to draw a minimal sample."""


class InfeasibleScene(LocalizationError):
    """Synthetic scene generation ran out of resampling attempts."""


class EmptyInput(LocalizationError):
    """An operation received an empty collection."""


class ParseError(LocalizationError):
    """A problem file could not be parsed."""


class SchemaVersionMismatch(LocalizationError):
    """A problem file declares an unsupported schema version."""


class InvalidProblem(LocalizationError):
    """A problem violates structural invariants."""
