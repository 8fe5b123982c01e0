"""Error conditions shared across the toolkit."""

from __future__ import annotations


class PhasefoldError(Exception):
    """Base class for all toolkit errors."""


class DegenerateAngleError(PhasefoldError):
    """A logarithm was requested within 1e-6 of the cut locus (angle pi).

    The principal axis is still estimated from the symmetric part of the
    rotation and attached as ``axis`` (reduced precision); ``angle`` carries
    the offending rotation angle.
    """

    def __init__(self, message: str, angle: float | None = None, axis=None):
        super().__init__(message)
        self.angle = angle
        self.axis = axis


class CoordinateEscapeError(PhasefoldError):
    """A propagated exponential coordinate approached the cut locus."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class PropagationValidityError(PhasefoldError):
    """Moment propagation left its validity region (covariance too large or
    the mean-equation coefficient matrix became ill conditioned).

    ``partial`` holds whatever series was accumulated before the failure so
    callers can flush it.
    """

    def __init__(self, message: str, time: float | None = None, partial=None):
        super().__init__(message)
        self.time = time
        self.partial = partial


class MeanConvergenceError(PhasefoldError):
    """The iterative sample mean did not reach tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SingularCovarianceError(PhasefoldError):
    """A covariance matrix was not positive definite enough to invert."""


class GridMismatchError(PhasefoldError):
    """Snapshot grids of two inputs do not line up."""


class ConfigError(PhasefoldError):
    """An experiment configuration could not be parsed or validated."""
