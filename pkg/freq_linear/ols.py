"""
Ordinary least squares and forward-backward stepwise selection by AIC.
"""
import logging
from typing import List, Sequence

import numpy as np
import statsmodels.api as sm

from core.data import Dataset
from core.exceptions import EstimationError
from core.results import FitResult, augment
from core.structure import GroupMode, PenaltyStructure


logger = logging.getLogger(__name__)


def _check_ols_size(d: Dataset):
    if d.n <= d.p + 1:
        raise EstimationError(
            f"OLS needs n > p + 1; got n={d.n}, p={d.p} on '{d.name}'"
        )


def _ols(y: np.ndarray, design: np.ndarray):
    rank = np.linalg.matrix_rank(design)
    if rank < design.shape[1]:
        raise EstimationError(
            f"Design with intercept is rank deficient (rank {rank} < {design.shape[1]})"
        )
    return sm.OLS(y, design).fit()


def fit_ols(d: Dataset) -> FitResult:
    """
    Least-squares fit with sigma2 = RSS / (n - p - 1).

    Raises:
        EstimationError: if n <= p + 1 or the augmented design is rank deficient
    """
    _check_ols_size(d)
    res = _ols(d.y, augment(d.X))
    params = np.asarray(res.params)
    return FitResult(
        intercept=params[0],
        beta=params[1:],
        sigma2=max(float(res.scale), np.finfo(np.float64).tiny),
        lam=np.zeros(1),
        method_tag='ols',
        cov_theta=np.asarray(res.cov_params()),
        structure=PenaltyStructure.global_(d.p, GroupMode.unpenalized()),
        details={'aic': float(res.aic), 'rss': float(res.ssr)},
    )


def _aic(d: Dataset, active: Sequence[int]) -> float:
    design = augment(d.X[:, list(active)]) if active else np.ones((d.n, 1))
    return float(_ols(d.y, design).aic)


def fit_stepwise(d: Dataset) -> FitResult:
    """
    Forward-backward selection by AIC, starting from the intercept-only model.

    Every step evaluates all single-column additions and removals and takes
    the one with the lowest AIC; on exact ties the move touching the lowest
    column index wins. The search stops when no move lowers the AIC.
    Excluded coefficients are exactly zero and their covariance rows and
    columns are zero.
    """
    _check_ols_size(d)
    active: List[int] = []
    current = _aic(d, active)
    start_aic = current
    steps = 0

    while True:
        best_move, best_aic = None, current
        for j in range(d.p):
            candidate = sorted(set(active) ^ {j})
            value = _aic(d, candidate)
            if value < best_aic:
                best_move, best_aic = j, value
        if best_move is None:
            break
        active = sorted(set(active) ^ {best_move})
        current = best_aic
        steps += 1

    logger.debug(f"Stepwise on '{d.name}': {steps} step(s), kept {active}")

    beta = np.zeros(d.p)
    cov = np.zeros((d.p + 1, d.p + 1))
    design = augment(d.X[:, active]) if active else np.ones((d.n, 1))
    res = _ols(d.y, design)
    params = np.asarray(res.params)
    keep = [0] + [j + 1 for j in active]
    beta[active] = params[1:]
    cov[np.ix_(keep, keep)] = np.asarray(res.cov_params())

    return FitResult(
        intercept=params[0],
        beta=beta,
        sigma2=max(float(res.scale), np.finfo(np.float64).tiny),
        lam=np.zeros(1),
        method_tag='step',
        cov_theta=cov,
        structure=PenaltyStructure.global_(d.p, GroupMode.unpenalized()),
        details={'aic': current, 'aic_intercept_only': start_aic, 'selected': active, 'steps': steps},
    )
