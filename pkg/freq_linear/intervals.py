"""
Wald intervals for the linear predictor.

Intervals target eta = intercept + x'beta, so no error-variance term is added.
"""
import numpy as np
from scipy import stats

from core.data import check_design
from core.exceptions import EstimationError
from core.results import FitResult, PredictionSet, augment
from core.validators import parse_level


def predict_with_intervals(fit: FitResult, X_test, level: float = 0.95,
                           use_corrected: bool = True) -> PredictionSet:
    """
    eta_hat +/- z * sqrt(x' V x) per row.

    Args:
        fit: Linear fit carrying a covariance over (intercept, beta)
        X_test: Test covariates, p columns
        level: Interval level in (0, 1)
        use_corrected: Prefer the penalty-uncertainty corrected covariance
            when the fit has one

    Raises:
        EstimationError: if the fit carries no covariance (e.g. lasso)
        DimensionMismatchError: if X_test does not have p columns
    """
    level = parse_level(level)
    X = check_design(X_test, fit.p)
    cov = fit.cov_theta_corrected if use_corrected and fit.cov_theta_corrected is not None else fit.cov_theta
    if cov is None:
        raise EstimationError(f"Intervals are unavailable for '{fit.method_tag}' fits")

    Xa = augment(X)
    eta = fit.intercept + X @ fit.beta
    var = np.clip(np.einsum('ij,jk,ik->i', Xa, cov, Xa), 0.0, None)
    half = stats.norm.ppf(0.5 + level / 2.0) * np.sqrt(var)
    return PredictionSet(eta_hat=eta, lower=eta - half, upper=eta + half, level=level)
