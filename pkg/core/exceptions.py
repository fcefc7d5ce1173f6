"""
Exception hierarchy shared by all estimators.

Non-fatal conditions (diagnostic warnings, separation, correction fallbacks)
are reported as flags on result objects, not raised.
"""
from typing import Optional, Sequence


class ShrinkageError(Exception):
    """Base class for every error raised by the toolkit."""


class DataValidationError(ShrinkageError, ValueError):
    """Input data or coding violates a precondition."""


class DimensionMismatchError(ShrinkageError, ValueError):
    """Array shapes do not line up (e.g. test matrix column count != p)."""


class EstimationError(ShrinkageError):
    """An estimator cannot produce a result for the given data."""


class ConvergenceError(EstimationError):
    """An iterative fit hit its iteration cap."""

    def __init__(self, message: str, iterations: Optional[int] = None):
        super().__init__(message)
        self.iterations = iterations


class PenaltyOptimizationError(EstimationError):
    """Marginal-likelihood optimization failed; carries the best point seen."""

    def __init__(self, message: str, best_log_lambda: Sequence[float], best_value: float):
        super().__init__(message)
        self.best_log_lambda = list(best_log_lambda)
        self.best_value = best_value
