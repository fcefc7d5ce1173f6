"""
Evaluation criteria for predicted linear predictors.

All metrics compare estimates against the *true* linear predictor of a
simulation, not against observed outcomes (``msep_observed`` and
``calibration_slope`` are the outcome-based variants).
"""
import logging
from typing import Tuple

import numpy as np
import statsmodels.api as sm
from statsmodels.tools.sm_exceptions import PerfectSeparationError

from core.exceptions import DataValidationError, DimensionMismatchError, EstimationError
from core.results import PredictionSet


logger = logging.getLogger(__name__)

LOGISTIC_WINSOR = (1.0 / 3.0, 3.0)


def _pair(a, b, min_len: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < min_len:
        raise DataValidationError(f"Need at least {min_len} values; got {a.shape[0]}")
    return a, b


def msep(eta_true, eta_hat) -> float:
    """Mean squared difference between true and estimated linear predictors."""
    a, b = _pair(eta_true, eta_hat)
    return float(np.mean((a - b) ** 2))


def msep_observed(y, eta_hat) -> float:
    """Mean squared error against observed test responses."""
    return msep(y, eta_hat)


def cslope(eta_true, eta_hat) -> float:
    """
    Least-squares slope of the predictions regressed on the true values.

    Values below 1 mean predictions are compressed (over-shrinkage); above 1
    they are too spread out. This is the reverse of the classical
    calibration slope.
    """
    truth, pred = _pair(eta_true, eta_hat, min_len=3)
    centred = truth - truth.mean()
    sxx = float(centred @ centred)
    if np.ptp(truth) == 0.0 or sxx == 0.0:
        raise DataValidationError("cslope is undefined when the true linear predictor has no variance")
    return float(centred @ (pred - pred.mean()) / sxx)


def calibration_slope(y, eta_hat, family: str = 'gaussian') -> float:
    """
    Classical calibration slope: outcomes regressed on the predictions.

    Gaussian: least-squares slope of y on eta_hat. Binomial: the slope of a
    logistic regression of y on eta_hat.
    """
    y, eta = _pair(y, eta_hat, min_len=3)
    if family == 'gaussian':
        return cslope(eta, y)
    if family != 'binomial':
        raise DataValidationError(f"Unknown family '{family}'")
    if np.ptp(eta) == 0.0:
        raise DataValidationError("Calibration slope needs varying predictions")
    try:
        result = sm.Logit(y, sm.add_constant(eta, has_constant='add')).fit(disp=0, maxiter=100)
    except (PerfectSeparationError, np.linalg.LinAlgError) as exc:
        raise EstimationError(f"Calibration model failed: {exc}")
    return float(result.params[1])


def coverage(intervals: PredictionSet, eta_true) -> Tuple[float, float]:
    """Fraction of true values inside their intervals, and the mean width."""
    truth, lower = _pair(eta_true, intervals.lower)
    upper = intervals.upper
    inside = (lower <= truth) & (truth <= upper)
    return float(np.mean(inside)), float(np.mean(upper - lower))


def winsorize_cslope(slope: float, bounds: Tuple[float, float] = LOGISTIC_WINSOR) -> float:
    lo, hi = bounds
    if not (0.0 < lo < hi):
        raise DataValidationError(f"Winsorizing bounds must satisfy 0 < lo < hi; got {bounds}")
    return float(min(max(slope, lo), hi))
