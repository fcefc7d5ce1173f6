"""
Maximum-likelihood, Firth and ridge logistic regression by Newton iterations.
"""
import logging
from typing import Optional, Sequence

import numpy as np
from django.conf import settings
from scipy import linalg
from scipy.special import expit, logit
from sklearn.model_selection import KFold

from core.data import Dataset
from core.exceptions import ConvergenceError, DataValidationError, EstimationError
from core.results import augment
from core.rng import STREAM_FOLDS, child_seed

from .fits import LogisticFit, check_binary


logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-8
ML_MAX_ITER = 50
SEPARATION_THRESHOLD = 1e3
FIRTH_MAX_ITER = 100
FIRTH_MAX_STEP = 5.0
MAX_HALVINGS = 30
RIDGE_MAX_ITER = 100
FOLD_ATTEMPTS = 20
RIDGE05_LAMBDA = 2.0


def loglik(design: np.ndarray, y: np.ndarray, theta: np.ndarray) -> float:
    eta = design @ theta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic_ml(d: Dataset) -> LogisticFit:
    """
    Newton-Raphson (IRLS) maximum likelihood.

    Convergence needs a gradient norm below 1e-8 with a negligible Newton
    step. Divergence (|coefficient| > 1e3, a singular information matrix or
    the iteration cap) is reported as ``converged=False``, not raised.
    """
    check_binary(d)
    X = augment(d.X)
    y = d.y
    theta = np.zeros(X.shape[1])
    converged = False
    it = 0
    for it in range(1, ML_MAX_ITER + 1):
        prob = expit(X @ theta)
        grad = X.T @ (y - prob)
        info = (X * (prob * (1.0 - prob))[:, None]).T @ X
        try:
            step = linalg.solve(info, grad, assume_a='pos')
        except (linalg.LinAlgError, ValueError):
            break
        if np.linalg.norm(grad) < GRADIENT_TOLERANCE and np.max(np.abs(step)) < 1e-6:
            converged = True
            break
        theta = theta + step
        if np.max(np.abs(theta)) > SEPARATION_THRESHOLD:
            break

    if not converged:
        logger.warning(f"ML logistic on '{d.name}' did not converge after {it} iteration(s) (separation?)")
    return LogisticFit(theta[0], theta[1:], 'ml', converged, it, lam=0.0)


def _firth_state(X: np.ndarray, y: np.ndarray, theta: np.ndarray):
    prob = expit(X @ theta)
    root_w = np.sqrt(prob * (1.0 - prob))
    XW = X * root_w[:, None]
    Q, R = linalg.qr(XW, mode='economic')
    hat = np.einsum('ij,ij->i', Q, Q)
    logdet = 2.0 * np.sum(np.log(np.abs(np.diag(R))))
    penalized = loglik(X, y, theta) + 0.5 * logdet
    return prob, XW, hat, penalized


def fit_logistic_firth(d: Dataset) -> LogisticFit:
    """
    Firth's bias-reduced logistic regression.

    Maximizes loglik + 1/2 log|I(theta)| with modified-score Newton steps
    U* = X'(y - p + h (1/2 - p)), steps capped at 5 and halved until the
    penalized log likelihood does not decrease.

    Raises:
        ConvergenceError: if the iteration cap is reached
    """
    check_binary(d)
    X = augment(d.X)
    y = d.y
    theta = np.zeros(X.shape[1])
    prob, XW, hat, current = _firth_state(X, y, theta)
    for it in range(1, FIRTH_MAX_ITER + 1):
        score = X.T @ (y - prob + hat * (0.5 - prob))
        try:
            step = linalg.solve(XW.T @ XW, score, assume_a='pos')
        except (linalg.LinAlgError, ValueError):
            raise EstimationError("Fisher information is singular")
        largest = np.max(np.abs(step)) / FIRTH_MAX_STEP
        if largest > 1.0:
            step = step / largest

        for _ in range(MAX_HALVINGS):
            trial = theta + step
            state = _firth_state(X, y, trial)
            if state[3] >= current - 1e-12:
                break
            step = step * 0.5
        theta = trial
        prob, XW, hat, current = state

        if np.max(np.abs(step)) < GRADIENT_TOLERANCE:
            return LogisticFit(theta[0], theta[1:], 'firth', True, it, details={'penalized_loglik': current})
    raise ConvergenceError(f"Firth logistic regression did not converge in {FIRTH_MAX_ITER} iterations",
                           FIRTH_MAX_ITER)


def _ridge_newton(X: np.ndarray, y: np.ndarray, lam: float, theta: Optional[np.ndarray] = None):
    p1 = X.shape[1]
    pen = np.ones(p1)
    pen[0] = 0.0
    if theta is None:
        ybar = np.clip(y.mean(), 1e-6, 1.0 - 1e-6)
        theta = np.zeros(p1)
        theta[0] = logit(ybar)

    def objective(t):
        return -loglik(X, y, t) + 0.5 * lam * float(np.sum(pen * t ** 2))

    current = objective(theta)
    for it in range(1, RIDGE_MAX_ITER + 1):
        prob = expit(X @ theta)
        grad = X.T @ (y - prob) - lam * pen * theta
        if np.linalg.norm(grad) < GRADIENT_TOLERANCE:
            return theta, it
        H = (X * (prob * (1.0 - prob))[:, None]).T @ X + np.diag(lam * pen)
        try:
            step = linalg.solve(H, grad, assume_a='pos')
        except (linalg.LinAlgError, ValueError):
            raise ConvergenceError("Penalized information matrix is singular", it)
        for _ in range(MAX_HALVINGS):
            trial = theta + step
            value = objective(trial)
            if value <= current + 1e-12:
                break
            step = step * 0.5
        theta, current = trial, value
    raise ConvergenceError(f"Ridge logistic regression did not converge in {RIDGE_MAX_ITER} iterations",
                           RIDGE_MAX_ITER)


def fit_logistic_ridge(d: Dataset, lam: float, method_tag: str = 'ridge') -> LogisticFit:
    """
    Minimize -loglik + (lam / 2) ||beta||^2 with the intercept unpenalized.

    ``lam = 2`` (prior variance 0.5) is the ridge05 configuration.
    """
    check_binary(d)
    if not lam >= 0 or not np.isfinite(lam):
        raise DataValidationError(f"Ridge penalty must be finite and >= 0; got {lam}")
    theta, it = _ridge_newton(augment(d.X), d.y, float(lam))
    return LogisticFit(theta[0], theta[1:], method_tag, True, it, lam=float(lam))


def ridge_grid(d: Dataset, size: int, ratio: float) -> np.ndarray:
    """Log-spaced decreasing grid whose top point is effectively the null model."""
    score = np.abs((d.X - d.X.mean(axis=0)).T @ (d.y - d.y.mean()))
    top = 1000.0 * max(float(np.max(score)), 1e-3)
    return np.exp(np.linspace(np.log(top), np.log(top * ratio), size))


def _deviance(X: np.ndarray, y: np.ndarray, theta: np.ndarray) -> float:
    return -2.0 * loglik(X, y, theta)


def _balanced_folds(d: Dataset, folds: int, seed: int):
    for attempt in range(FOLD_ATTEMPTS):
        kfold = KFold(n_splits=folds, shuffle=True, random_state=child_seed(seed, STREAM_FOLDS, attempt))
        splits = list(kfold.split(d.X))
        if all(0.0 < d.y[train].mean() < 1.0 for train, _ in splits):
            if attempt:
                logger.warning(f"Fold construction on '{d.name}' needed {attempt + 1} attempts")
            return splits
    raise EstimationError(f"No {folds}-fold split with both classes in every training fold "
                          f"after {FOLD_ATTEMPTS} attempts")


def fit_logistic_ridge_cv(d: Dataset, folds: Optional[int] = None, seed: int = 0,
                          grid: Optional[Sequence[float]] = None) -> LogisticFit:
    """
    Ridge logistic regression with the penalty chosen by K-fold CV deviance.

    Folds are reshuffled (up to 20 attempts) until every training fold holds
    both classes. Grid points whose fold fit fails count as infinite deviance.
    """
    check_binary(d)
    folds = folds or getattr(settings, 'LOGISTIC_CV_FOLDS', 10)
    if d.n < folds:
        raise DataValidationError(f"{folds}-fold CV needs at least {folds} rows; got {d.n}")
    if grid is None:
        grid = ridge_grid(d, getattr(settings, 'LOGISTIC_GRID_SIZE', 100),
                          getattr(settings, 'LOGISTIC_GRID_RATIO', 1e-4))
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0 or np.any(grid <= 0):
        raise DataValidationError("Ridge CV grid must be a non-empty vector of positive penalties")

    X = augment(d.X)
    deviance = np.zeros(grid.shape[0])
    for train, valid in _balanced_folds(d, folds, seed):
        theta = None
        for k, lam in enumerate(grid):
            try:
                theta, _ = _ridge_newton(X[train], d.y[train], float(lam), theta)
                deviance[k] += _deviance(X[valid], d.y[valid], theta)
            except ConvergenceError:
                deviance[k] = np.inf
                theta = None

    best = int(np.argmin(deviance))
    lam = float(grid[best])
    fit = fit_logistic_ridge(d, lam, method_tag='ridgecv')
    return fit.evolve(details={
        'selected_lambda': lam,
        'selected_index': best,
        'lambda_grid': grid.tolist(),
        'cv_deviance': (deviance / d.n).tolist(),
    })


def fit_logistic_ridge05(d: Dataset) -> LogisticFit:
    return fit_logistic_ridge(d, RIDGE05_LAMBDA, method_tag='ridge05')
