"""Exception hierarchy shared by all stablegap modules."""


class StableGapError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(StableGapError, ValueError):
    """Input outside the admissible parameter range (alpha, d, gamma poles, ...)."""


class MeshTooCoarseError(StableGapError, ValueError):
    pass


class QuadratureError(StableGapError, ArithmeticError):
    """Numerical integration failed to reach its tolerance.

    ``estimate`` carries the achieved error estimate.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SolverError(StableGapError, ArithmeticError):
    """Eigensolver or linear solver did not converge; ``residuals`` holds the last residuals."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class PositivityError(StableGapError, ArithmeticError):
    """Ground state changed sign: signals an assembly bug."""


class TruncationError(StableGapError, ValueError):
    """Spectral expansion truncated too early for the requested time."""


class CenteringError(StableGapError, ValueError):
    pass


class StepCapError(StableGapError, RuntimeError):
    """Monte Carlo paths did not exit within the configured step cap."""
