"""
Fit results, prediction sets and the shared linear-predictor algebra.
"""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

import numpy as np

from .data import check_design
from .exceptions import DataValidationError, DimensionMismatchError
from .structure import UNPENALIZED, PenaltyStructure


def _readonly(values, ndim: int) -> Optional[np.ndarray]:
    if values is None:
        return None
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise DimensionMismatchError(f"Expected {ndim}-dimensional array; got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_covariance(cov: np.ndarray, size: int, label: str):
    if cov.shape != (size, size):
        raise DimensionMismatchError(f"{label} must be {size}x{size}; got {cov.shape}")
    scale = max(float(np.max(np.abs(cov))), 1e-300)
    if float(np.max(np.abs(cov - cov.T))) > 1e-8 * scale:
        raise DataValidationError(f"{label} is not symmetric")
    if np.any(np.diag(cov) < 0):
        raise DataValidationError(f"{label} has negative variances")


@dataclass(frozen=True, eq=False)
class FitResult:
    """
    Linear-model fit.

    Covariances are stored over theta = (intercept, beta), intercept first,
    so interval computations see the intercept block; ``cov_beta`` is the
    p x p coefficient block. ``lam`` is on the natural scale, one entry per
    penalty group (all zeros for unpenalized fits).
    """

    intercept: float
    beta: np.ndarray
    sigma2: float
    lam: np.ndarray
    method_tag: str
    cov_theta: Optional[np.ndarray] = None
    cov_theta_corrected: Optional[np.ndarray] = None
    structure: Optional[PenaltyStructure] = None
    correction_fallback: bool = False
    details: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'intercept', float(self.intercept))
        object.__setattr__(self, 'sigma2', float(self.sigma2))
        object.__setattr__(self, 'beta', _readonly(self.beta, 1))
        object.__setattr__(self, 'lam', _readonly(self.lam, 1))
        object.__setattr__(self, 'cov_theta', _readonly(self.cov_theta, 2))
        object.__setattr__(self, 'cov_theta_corrected', _readonly(self.cov_theta_corrected, 2))

        if not self.sigma2 > 0:
            raise DataValidationError(f"sigma2 must be positive; got {self.sigma2}")
        size = self.p + 1
        if self.cov_theta is not None:
            _check_covariance(self.cov_theta, size, 'cov_theta')
        if self.cov_theta_corrected is not None:
            _check_covariance(self.cov_theta_corrected, size, 'cov_theta_corrected')
        if self.structure is not None:
            if self.structure.p != self.p or self.structure.n_groups != self.lam.shape[0]:
                raise DimensionMismatchError("Penalty structure does not match beta/lambda")
            for g in self.structure.groups_with(UNPENALIZED):
                if self.lam[g] != 0.0:
                    raise DataValidationError(f"Unpenalized group {g} has lambda {self.lam[g]}")

    @property
    def p(self) -> int:
        return self.beta.shape[0]

    @property
    def cov_beta(self) -> Optional[np.ndarray]:
        return None if self.cov_theta is None else self.cov_theta[1:, 1:]

    @property
    def cov_beta_corrected(self) -> Optional[np.ndarray]:
        return None if self.cov_theta_corrected is None else self.cov_theta_corrected[1:, 1:]

    @property
    def log_lambda(self) -> np.ndarray:
        with np.errstate(divide='ignore'):
            return np.log(self.lam)

    def evolve(self, **changes) -> 'FitResult':
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """Point predictions of the linear predictor with interval bounds at ``level``."""

    eta_hat: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float

    def __post_init__(self):
        for name in ('eta_hat', 'lower', 'upper'):
            object.__setattr__(self, name, _readonly(getattr(self, name), 1))
        if not 0.0 < self.level < 1.0:
            raise DataValidationError(f"Interval level must lie in (0, 1); got {self.level}")
        if not (self.eta_hat.shape == self.lower.shape == self.upper.shape):
            raise DimensionMismatchError("eta_hat, lower and upper differ in length")
        if np.any(self.lower > self.eta_hat) or np.any(self.eta_hat > self.upper):
            raise DataValidationError("Interval bounds do not bracket eta_hat")

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


def linear_predictor(fit, X) -> np.ndarray:
    """
    Row-wise intercept + X beta for any fit exposing ``intercept`` and ``beta``.

    Raises:
        DimensionMismatchError: if X does not have p columns
    """
    X = check_design(X, fit.beta.shape[0])
    return fit.intercept + X @ fit.beta


def augment(X: np.ndarray) -> np.ndarray:
    """Prepend the intercept column."""
    return np.hstack([np.ones((X.shape[0], 1)), X])
