"""Exception and warning types shared across the package."""


class ConjlocError(Exception):
    """Base class for all package errors."""


class NotAnOvalError(ConjlocError, ValueError):
    """Support function does not describe a strictly convex curve."""


class NonGenericError(ConjlocError):
    """Input has a degenerate (non-simple) critical point or vertex."""


class DegenerateError(ConjlocError):
    """Operation is undefined for a degenerate input (circle, sphere)."""


class CurvatureZeroError(ConjlocError, ValueError):
    """Plane curve has an inflection where an evolute was requested."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class FinenessError(ConjlocError):
    """A turning step exceeded the sampling fineness contract."""

    def __init__(self, message, arc=None, index=None):
        super().__init__(message)
        self.arc = arc
        self.index = index


class TurningResidualError(ConjlocError):
    """Total turning is not close to an integer multiple of 2*pi."""


class RegularityError(ConjlocError, ValueError):
    """Curve velocity vanishes."""


class OffSurfaceError(ConjlocError, ValueError):
    """Point does not lie on the surface."""


class NonConvexError(ConjlocError):
    """Surface failed a strict convexity check."""


class ConvergenceError(ConjlocError):
    """An iterative solver did not converge."""


class IntegrationError(ConjlocError):
    """Geodesic integration failed (drift, step underflow, missing zero)."""


class QuadratureError(ConjlocError):
    """Quadrature did not converge under refinement."""


class CuspProximityError(ConjlocError, ValueError):
    """Quantity diverges because the parameter is too close to a cusp."""


class AmbiguousCountError(ConjlocError):
    """A near-tangential crossing could not be certified."""


class GridTooCoarseError(ConjlocError):
    """Count grid cannot resolve some region."""


class ConfigError(ConjlocError, ValueError):
    """Invalid job configuration."""


class NonGenericPointWarning(UserWarning):
    """Base point distance function has a degenerate stationary point."""
