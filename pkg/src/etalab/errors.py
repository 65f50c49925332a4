"""Exception hierarchy shared across the package."""


class EtalabError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EtalabError, ValueError):
    """Invalid physical or configuration input."""


class ShapeError(EtalabError, ValueError):
    """Operator / state dimension or basis mismatch."""


class CapacityError(EtalabError):
    """Requested dimension exceeds a dense-path cap."""


class ConvergenceError(EtalabError):
    """An iterative solver failed to converge."""

    def __init__(self, message, residual=None, last_iterate=None):
        super().__init__(message)
        self.residual = residual
        self.last_iterate = last_iterate


class NumericalInstabilityError(EtalabError):
    """Integration produced an unphysical state (trace, norm or positivity)."""


class StepSizeError(NumericalInstabilityError):
    """Norm drift exceeded the integrator tolerance; reduce dt."""


class BoundaryError(DomainError):
    """A moment target sits on or outside the achievable range."""

    def __init__(self, message, saturated=None):
        super().__init__(message)
        self.saturated = saturated


class DegenerateProjectionError(DomainError):
    """A sector projection has numerically zero trace."""


class TrajectoryChannelError(EtalabError):
    """All jump-channel weights vanished at a drawn jump event."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ValidationError(DomainError):
    """A config field failed validation; names the offending field."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
