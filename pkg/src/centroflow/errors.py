"""Exception types shared across the package."""


class CentroflowError(Exception):
    """Base class for all package errors."""


class ConvexityViolation(CentroflowError):
    """A radii-of-curvature eigenvalue dropped to (or below) the convexity floor,
    or the support function is not positive everywhere."""


class StepFailure(CentroflowError):
    """Time stepper gave up after repeated step rejections."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class DegenerateSpan(CentroflowError):
    """Point set for ellipsoid fitting lies (numerically) in a hyperplane."""


class RejectionExhausted(CentroflowError):
    """Random shape generation failed to produce a convex body."""


class Extinct(CentroflowError):
    """Requested a ball solution at or beyond its extinction time."""


class ConfigError(CentroflowError):
    """Run configuration file is malformed or violates the schema."""
