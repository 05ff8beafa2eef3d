"""Simulation and numerical phase analysis of super-linear preferential
attachment trees with fitness, and of the equivalent continuous-time
branching process with exponential clocks."""

from . import criterion, fitness, treegen, weights, wsampler
from .errors import (ConfigurationError, LambdaDomainError, ModeError,
                     NumericOverflowError, PaftreeError,
                     PrecisionUnreachableError)

__version__ = "0.1.0"

__all__ = [
    "criterion", "fitness", "treegen", "weights", "wsampler",
    "ConfigurationError", "LambdaDomainError", "ModeError",
    "NumericOverflowError", "PaftreeError", "PrecisionUnreachableError",
]
