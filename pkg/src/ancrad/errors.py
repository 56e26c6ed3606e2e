"""Exception taxonomy shared across the package.

Every error raised by ancrad derives from :class:`AncradError` so callers
can catch package failures with a single handler. The subclasses mirror
the failure modes of the numerical kernels: bad shapes, domain violations,
definiteness and rank failures, non-convergence, geometric singularities,
and manifold feasibility drift.
"""


class AncradError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(AncradError):
    """Array dimensions do not match the documented contract."""


class DomainError(AncradError):
    """Scalar or matrix argument outside the mathematical domain."""


class DefinitenessError(AncradError):
    """A matrix required to be positive (semi)definite is not."""


class RankError(AncradError):
    """A matrix is rank deficient where full rank is required."""


class NumericError(AncradError):
    """An iterative kernel failed to converge or produced non-finite values."""


class SingularityError(AncradError):
    """Evaluation at a singular configuration, e.g. coincident points."""


class FeasibilityError(AncradError):
    """Manifold feasibility residual exceeded its tolerance."""


class CalibrationError(AncradError):
    """Calibration bracketing or validation failed."""


class ConfigError(AncradError):
    """Configuration input failed schema validation."""
