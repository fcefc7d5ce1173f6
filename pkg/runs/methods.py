"""
Method registry: maps a method key to its estimator and prediction rule.

Every method is fitted on a training Dataset with its own seed and
returns a MethodOutcome on the test design.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, NamedTuple, Optional, Sequence

import numpy as np

from bayes_shrink.draws import PosteriorDraws, posterior_predict
from bayes_shrink.gibbs import gibbs_linear
from bayes_shrink.priors import LOGISTIC_SCALE, McmcConfig, prior_ladder
from core.data import Dataset
from core.exceptions import DataValidationError
from core.results import FitResult, PredictionSet
from core.rng import STREAM_GROUPS, child_rng
from freq_linear.intervals import predict_with_intervals
from freq_linear.lasso import LassoSpec, fit_lasso_cv
from freq_linear.ols import fit_ols, fit_stepwise
from freq_linear.ridge import RidgeSpec, fit_ridge_ml
from freq_linear.variants import DECLARED_GROUP_COUNT, RIDGE_VARIANTS, ridge_structure
from logistic.bayes import fit_logistic_bayes
from logistic.fits import LogisticFit, linear_predictor_mean, predict_prob
from logistic.likelihood import (
    fit_logistic_firth, fit_logistic_ml, fit_logistic_ridge05, fit_logistic_ridge_cv,
)
from simgen.registry import LINEAR, LOGISTIC


logger = logging.getLogger(__name__)

BAYES_LINEAR = {
    'bayes-eb': 'eb',
    'bayes-ig': 'ig',
    'bayes-glo': 'glo',
    'bayes-grouped': 'grouped',
    'bayes-2': 'grouped',
    'bayes-loc': 'loc',
}
LINEAR_METHODS = ('ols', 'step', 'lasso') + RIDGE_VARIANTS + tuple(BAYES_LINEAR)
LOGISTIC_METHODS = ('ml', 'firth', 'ridgecv', 'ridge05', 'bayes-glo', 'bayes-loc')
METHODS = {LINEAR: LINEAR_METHODS, LOGISTIC: LOGISTIC_METHODS}
GROUPED_METHODS = tuple(DECLARED_GROUP_COUNT) + ('bayes-grouped', 'bayes-2')


@dataclass(frozen=True)
class MethodSpec:
    """One entry of a run's method list. ``tag`` labels records; ``method`` picks the estimator."""

    tag: str
    method: str
    groups: Sequence[Sequence[int]] = ()
    scale: Optional[float] = None
    mcmc: Optional[McmcConfig] = None
    corrected: bool = True
    criterion: str = 'reml'
    optimizer: str = 'nelder-mead'
    folds: Optional[int] = None

    @property
    def is_bayes(self) -> bool:
        return self.method.startswith('bayes-')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'tag': self.tag, 'method': self.method, 'groups': [list(g) for g in self.groups],
            'scale': self.scale, 'mcmc': self.mcmc.to_dict() if self.mcmc else None,
            'corrected': self.corrected, 'criterion': self.criterion,
            'optimizer': self.optimizer, 'folds': self.folds,
        }


class MethodOutcome(NamedTuple):
    eta_hat: np.ndarray
    prob_hat: Optional[np.ndarray]
    intervals: Optional[PredictionSet]
    log_lambda: Optional[np.ndarray]
    flags: Dict[str, Any]


def check_method(spec: MethodSpec, family: str):
    if spec.method not in METHODS[family]:
        raise DataValidationError(f"Method '{spec.method}' is not available for {family} models")
    if spec.method in GROUPED_METHODS and not spec.groups:
        raise DataValidationError(f"Method '{spec.method}' needs a group specification")


def fit_method(spec: MethodSpec, family: str, train: Dataset, seed: int, n_jobs: Optional[int] = None):
    """
    Fit one method.

    ``n_jobs`` sizes the chain pool of Bayesian methods. Returns a FitResult,
    LogisticFit or PosteriorDraws depending on the method.
    """
    check_method(spec, family)
    method = spec.method
    cfg = (spec.mcmc or McmcConfig()).with_seed(seed)

    if family == LOGISTIC:
        if method == 'ml':
            return fit_logistic_ml(train)
        if method == 'firth':
            return fit_logistic_firth(train)
        if method == 'ridge05':
            return fit_logistic_ridge05(train)
        if method == 'ridgecv':
            return fit_logistic_ridge_cv(train, folds=spec.folds, seed=seed)
        return fit_logistic_bayes(train, method.split('-', 1)[1], cfg,
                                  scale=spec.scale or LOGISTIC_SCALE, method_tag=spec.tag, n_jobs=n_jobs)

    if method == 'ols':
        return fit_ols(train)
    if method == 'step':
        return fit_stepwise(train)
    if method == 'lasso':
        return fit_lasso_cv(train, LassoSpec(folds=spec.folds), seed)
    if method in RIDGE_VARIANTS:
        structure = ridge_structure(method, train.p, spec.groups, rng=child_rng(seed, STREAM_GROUPS))
        ridge = RidgeSpec(structure=structure, criterion=spec.criterion, optimizer=spec.optimizer,
                          unconditional=spec.corrected, method_tag=spec.tag)
        return fit_ridge_ml(train, ridge)
    prior = prior_ladder(BAYES_LINEAR[method], train, spec.groups, scale=spec.scale or 1.0)
    return gibbs_linear(train, prior, cfg, method_tag=spec.tag, n_jobs=n_jobs)


def _penalized(fit: FitResult) -> bool:
    return fit.structure is not None and bool(np.any(fit.lam > 0))


def predict_method(fitted, X_test: np.ndarray, level: float, corrected: bool = True) -> MethodOutcome:
    """Point predictions, intervals (when the method has them), penalties and status flags."""
    if isinstance(fitted, PosteriorDraws):
        flags = {'diagnostics_warning': fitted.diagnostics_warning}
        log_lambda = fitted.posterior_log_lambda
        if fitted.details.get('family') == 'binomial':
            return MethodOutcome(linear_predictor_mean(fitted, X_test), predict_prob(fitted, X_test),
                                 None, log_lambda, flags)
        intervals = posterior_predict(fitted, X_test, level)
        return MethodOutcome(intervals.eta_hat, None, intervals, log_lambda, flags)

    if isinstance(fitted, LogisticFit):
        log_lambda = fitted.log_lambda if fitted.lam else None
        return MethodOutcome(linear_predictor_mean(fitted, X_test), predict_prob(fitted, X_test),
                             None, log_lambda, {'converged': fitted.converged})

    flags = {'correction_fallback': fitted.correction_fallback}
    log_lambda = fitted.log_lambda if _penalized(fitted) else None
    if fitted.cov_theta is None:
        eta = fitted.intercept + np.asarray(X_test) @ fitted.beta
        return MethodOutcome(eta, None, None, log_lambda, flags)
    intervals = predict_with_intervals(fitted, X_test, level, use_corrected=corrected)
    return MethodOutcome(intervals.eta_hat, None, intervals, log_lambda, flags)
