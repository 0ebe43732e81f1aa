"""Propagators, dynamical invariants and Ermakov machinery for time-dependent
quadratic Hamiltonians ``H = a p**2 + b x**2 + c p x + d x p``."""

__version__ = "0.1.0"

from .coeffs import PRESET_NAMES, CoefficientSet, from_inline, lambda_factor, preset, tau_sigma  # noqa: E402
from .errors import (AccuracyWarning, DomainError, IntegrationError, ModeError, NumericalError,  # noqa: E402
                     QuadinvError, ResolutionError, SingularityError, TruncationWarning, UsageError)
from .grid_ops import Grid, LadderData, WaveFunction  # noqa: E402

__all__ = [
    "PRESET_NAMES", "CoefficientSet", "from_inline", "lambda_factor", "preset", "tau_sigma",
    "AccuracyWarning", "DomainError", "IntegrationError", "ModeError", "NumericalError", "QuadinvError",
    "ResolutionError", "SingularityError", "TruncationWarning", "UsageError",
    "Grid", "LadderData", "WaveFunction",
]
