"""
Lasso by cyclic coordinate descent with K-fold cross-validated penalty.

Objective on the given (coded) columns, intercept unpenalized:

    (1 / 2n) * RSS + lambda * sum_j |beta_j|

Columns are centered but not rescaled.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from django.conf import settings
from sklearn.model_selection import KFold

from core.data import Dataset
from core.exceptions import ConvergenceError, DataValidationError
from core.results import FitResult
from core.rng import STREAM_FOLDS, child_seed
from core.structure import GroupMode, PenaltyStructure


logger = logging.getLogger(__name__)

CD_TOLERANCE = 1e-12
CD_MAX_SWEEPS = 100000


@dataclass(frozen=True)
class LassoSpec:
    """
    Cross-validation settings.

    ``lambda_grid`` overrides the default grid of ``grid_size`` log-spaced
    points from lambda_max down to ``grid_ratio * lambda_max``.
    """

    folds: int = None
    lambda_grid: Optional[Tuple[float, ...]] = None
    grid_size: int = None
    grid_ratio: float = None
    selection: str = 'min-cv-error'

    def __post_init__(self):
        if self.folds is None:
            object.__setattr__(self, 'folds', getattr(settings, 'LASSO_FOLDS', 10))
        if self.grid_size is None:
            object.__setattr__(self, 'grid_size', getattr(settings, 'LASSO_GRID_SIZE', 100))
        if self.grid_ratio is None:
            object.__setattr__(self, 'grid_ratio', getattr(settings, 'LASSO_GRID_RATIO', 1e-3))

        if self.folds < 2:
            raise DataValidationError(f"Lasso needs at least 2 folds; got {self.folds}")
        if self.selection != 'min-cv-error':
            raise DataValidationError(f"Unknown lasso selection rule '{self.selection}'")
        if self.lambda_grid is not None:
            grid = tuple(float(v) for v in self.lambda_grid)
            if not grid:
                raise DataValidationError("Lasso lambda grid is empty")
            if any(v <= 0 for v in grid) or any(b >= a for a, b in zip(grid, grid[1:])):
                raise DataValidationError("Lasso lambda grid must be positive and strictly decreasing")
            object.__setattr__(self, 'lambda_grid', grid)
        elif self.grid_size < 1 or not 0 < self.grid_ratio < 1:
            raise DataValidationError("Lasso grid needs grid_size >= 1 and 0 < grid_ratio < 1")


def lambda_max(X: np.ndarray, y: np.ndarray) -> float:
    """Smallest penalty at which every coefficient is exactly zero."""
    Xc = X - X.mean(axis=0)
    return float(np.max(np.abs(Xc.T @ (y - y.mean()))) / X.shape[0])


def default_grid(X: np.ndarray, y: np.ndarray, size: int, ratio: float) -> np.ndarray:
    top = lambda_max(X, y)
    if top <= 0:
        top = 1.0
    return np.exp(np.linspace(np.log(top), np.log(top * ratio), size))


def soft_threshold(z, t):
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def lasso_path(X: np.ndarray, y: np.ndarray, grid) -> Tuple[np.ndarray, np.ndarray]:
    """
    Coordinate-descent solutions along a decreasing grid with warm starts.

    Returns:
        (intercepts of shape (L,), coefficients of shape (L, p))
    """
    n, p = X.shape
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    col_sq = np.einsum('ij,ij->j', Xc, Xc) / n

    beta = np.zeros(p)
    resid = yc.copy()
    coefs = np.zeros((len(grid), p))
    for k, lam in enumerate(grid):
        for sweep in range(CD_MAX_SWEEPS):
            max_change = 0.0
            for j in range(p):
                if col_sq[j] == 0.0:
                    continue
                old = beta[j]
                z = Xc[:, j] @ resid / n + col_sq[j] * old
                new = soft_threshold(z, lam) / col_sq[j]
                if new != old:
                    resid -= Xc[:, j] * (new - old)
                    beta[j] = new
                    max_change = max(max_change, abs(new - old) * np.sqrt(col_sq[j]))
            if max_change < CD_TOLERANCE:
                break
        else:
            raise ConvergenceError(f"Coordinate descent did not converge at lambda={lam:.4g}", CD_MAX_SWEEPS)
        coefs[k] = beta
    intercepts = y_mean - coefs @ x_mean
    return intercepts, coefs


def _lasso_result(d: Dataset, intercept: float, beta: np.ndarray, lam: float, details: dict) -> FitResult:
    resid = d.y - intercept - d.X @ beta
    rss = float(resid @ resid)
    dof = max(d.n - int(np.count_nonzero(beta)) - 1, 1)
    return FitResult(
        intercept=intercept,
        beta=beta,
        sigma2=max(rss / dof, np.finfo(np.float64).tiny),
        lam=[lam],
        method_tag='lasso',
        structure=PenaltyStructure.global_(d.p, GroupMode.fixed(lam)),
        details=details,
    )


def fit_lasso(d: Dataset, lam: float) -> FitResult:
    """Lasso at a single fixed penalty."""
    if not lam > 0:
        raise DataValidationError(f"Lasso penalty must be positive; got {lam}")
    b0, B = lasso_path(d.X, d.y, [float(lam)])
    return _lasso_result(d, b0[0], B[0], float(lam), {'selected_lambda': float(lam)})


def fit_lasso_cv(d: Dataset, spec: LassoSpec, seed: int) -> FitResult:
    """
    Select the penalty by K-fold cross-validation and refit on all rows.

    Folds are shuffled once with a child seed of ``seed``. The grid point with
    the smallest mean validation squared error wins; ties go to the larger
    penalty. No coefficient covariance is produced.

    Raises:
        DataValidationError: if a fold would hold fewer than 2 observations
    """
    if d.n < 2 * spec.folds:
        raise DataValidationError(
            f"{spec.folds}-fold CV on n={d.n} leaves folds with fewer than 2 observations"
        )
    if spec.lambda_grid is not None:
        grid = np.asarray(spec.lambda_grid)
    else:
        grid = default_grid(d.X, d.y, spec.grid_size, spec.grid_ratio)

    kfold = KFold(n_splits=spec.folds, shuffle=True, random_state=child_seed(seed, STREAM_FOLDS))
    errors = np.zeros((spec.folds, grid.shape[0]))
    for f, (train, valid) in enumerate(kfold.split(d.X)):
        b0, B = lasso_path(d.X[train], d.y[train], grid)
        pred = b0[None, :] + d.X[valid] @ B.T
        errors[f] = np.mean((d.y[valid, None] - pred) ** 2, axis=0)

    cv_error = errors.mean(axis=0)
    best = int(np.argmin(cv_error))
    lam = float(grid[best])

    b0, B = lasso_path(d.X, d.y, grid[:best + 1])
    logger.debug(f"Lasso CV on '{d.name}': lambda={lam:.4g} ({int(np.count_nonzero(B[-1]))} nonzero)")
    return _lasso_result(d, b0[-1], B[-1], lam, {
        'selected_lambda': lam,
        'selected_index': best,
        'lambda_grid': grid.tolist(),
        'cv_error': cv_error.tolist(),
    })
