"""Exception hierarchy shared by all circlekit modules."""

from __future__ import annotations


class CircleKitError(Exception):
    """Base class for all circlekit errors."""


class ConfigError(CircleKitError):
    """Invalid run configuration or malformed input data."""


class BudgetExceededError(CircleKitError):
    """An enumeration or evaluation would exceed its configured budget."""


class QuadratureError(CircleKitError):
    """Panel refinement was exhausted before reaching the requested tolerance.

    Carries the best estimate obtained so far and the achieved error estimate,
    so callers can decide whether the partial result is still usable.
    """

    def __init__(self, message: str, best_estimate: complex, achieved_error: float):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.achieved_error = achieved_error
