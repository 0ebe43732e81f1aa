"""Exception and warning types shared across the toolkit."""


class QuadinvError(Exception):
    """Base class for all toolkit errors."""


class DomainError(QuadinvError, ValueError):
    """A time, coordinate or parameter lies outside the admissible domain."""


class UsageError(QuadinvError, ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class IntegrationError(QuadinvError, RuntimeError):
    """The adaptive integrator failed (for example step-size underflow)."""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t = {t:.17g})")
        self.t = t


class SingularityError(QuadinvError, ArithmeticError):
    """A quantity that must stay away from zero reached it.

    Raised at caustics of the kernel, at zeros of the auxiliary solution
    and when the Green-function quadrature meets a zero of the derivative
    of the characteristic solution.
    """

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t = {t:.17g})")
        self.t = t


class ModeError(QuadinvError, ValueError):
    """The requested representation does not exist for these parameters."""


class ResolutionError(QuadinvError, RuntimeError):
    """The spatial grid cannot resolve the requested computation."""


class NumericalError(QuadinvError, RuntimeError):
    """A linear solve or similar numerical kernel failed."""


class AccuracyWarning(UserWarning):
    """Result is computed but its accuracy guarantee does not hold."""


class TruncationWarning(UserWarning):
    """A truncated series has not converged to the requested level."""
