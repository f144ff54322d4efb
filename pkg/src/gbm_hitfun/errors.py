"""Exception types shared across the package."""


class DomainError(ValueError):
    """Raised when an argument lies outside an operation's domain."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative or adaptive routine fails to converge.

    Carries the best available estimate so callers can decide whether
    the partial result is still usable.
    """

    def __init__(self, message, estimate=None, err_est=None):
        super().__init__(message)
        self.estimate = estimate
        self.err_est = err_est


class ZeroCountError(ConvergenceError):
    """Raised when a root search finds a number of zeros inconsistent
    with the theoretical count."""


class EnvelopeError(ConvergenceError):
    """Raised when the tail of a semi-infinite integrand cannot be
    bounded by a decaying envelope at the truncation point."""
