"""
Logistic fit results and predicted probabilities.
"""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Union

import numpy as np
from django.conf import settings
from scipy.special import expit

from bayes_shrink.draws import PosteriorDraws
from core.data import Dataset, check_design
from core.exceptions import DataValidationError, EstimationError


@dataclass(frozen=True, eq=False)
class LogisticFit:
    """
    Point estimate of a logistic model.

    ``converged`` is False when maximum likelihood diverges (separation);
    coefficients are then the last iterate and need not be finite.
    """

    intercept: float
    beta: np.ndarray
    method_tag: str
    converged: bool
    iterations: int
    lam: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64, copy=True)
        beta.setflags(write=False)
        object.__setattr__(self, 'beta', beta)
        object.__setattr__(self, 'intercept', float(self.intercept))
        if self.converged and not (np.isfinite(self.intercept) and np.all(np.isfinite(beta))):
            raise DataValidationError("A converged logistic fit must have finite coefficients")

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([[self.intercept], self.beta])

    @property
    def log_lambda(self) -> np.ndarray:
        if not self.lam:
            return np.array([-np.inf]) if self.lam == 0 else np.zeros(0)
        return np.array([np.log(self.lam)])

    def evolve(self, **changes) -> 'LogisticFit':
        return replace(self, **changes)


def check_binary(d: Dataset):
    if not d.is_binary_response():
        raise DataValidationError(f"Dataset '{d.name}' needs a 0/1 response for logistic fits")


def predict_prob(fit: Union[LogisticFit, PosteriorDraws], X_test) -> np.ndarray:
    """
    Predicted event probabilities.

    For posterior draws, the posterior mean of the per-draw probabilities.
    """
    X = check_design(X_test, fit.p)
    if isinstance(fit, LogisticFit):
        return expit(fit.intercept + X @ fit.beta)
    if fit.n_draws == 0:
        raise EstimationError("No posterior draws")
    chunk = max(int(getattr(settings, 'PREDICTION_CHUNK_ROWS', 512)), 1)
    out = np.empty(X.shape[0])
    for start in range(0, X.shape[0], chunk):
        rows = slice(start, start + chunk)
        out[rows] = expit(fit.beta0[:, None] + fit.beta @ X[rows].T).mean(axis=0)
    return out


def linear_predictor_mean(fit: Union[LogisticFit, PosteriorDraws], X_test) -> np.ndarray:
    """Linear predictor at the point estimate, or its posterior mean."""
    X = check_design(X_test, fit.p)
    if isinstance(fit, LogisticFit):
        return fit.intercept + X @ fit.beta
    return float(np.mean(fit.beta0)) + X @ fit.beta.mean(axis=0)
