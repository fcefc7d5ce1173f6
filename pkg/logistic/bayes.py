"""
Bayesian logistic regression with shrinkage priors by Polya-Gamma augmentation.

Given omega_i ~ PG(1, eta_i), the coefficients (beta0, beta) are conditionally
Gaussian with precision X'Omega X + diag(0, 1/tau2) and mean solving
(X'Omega X + diag(0, 1/tau2)) theta = X'(y - 1/2). The intercept prior is
flat; sigma2 is fixed at 1 so tau2 is the prior variance itself.
"""
import logging
import math
from typing import Dict, Optional

import numpy as np
from polyagamma import random_polyagamma
from scipy import linalg

from bayes_shrink.draws import PosteriorDraws, stack_chains, with_diagnostics
from bayes_shrink.gibbs import ScaleUpdater, run_chains
from bayes_shrink.priors import LOGISTIC_SCALE, McmcConfig, PriorSpec, Sigma2Prior, VariancePrior
from core.data import Dataset
from core.exceptions import DataValidationError, DimensionMismatchError, EstimationError
from core.results import augment
from core.rng import STREAM_CHAIN, child_rng
from core.structure import PenaltyStructure

from .fits import check_binary


logger = logging.getLogger(__name__)

ETA_CLIP = 20.0
LOGISTIC_PRIORS = ('glo', 'loc')


def logistic_prior(name: str, p: int, scale: float = LOGISTIC_SCALE) -> PriorSpec:
    """Half-Cauchy(0, scale) on one shared (glo) or per-coefficient (loc) prior standard deviation."""
    if name == 'glo':
        structure = PenaltyStructure.global_(p)
    elif name == 'loc':
        structure = PenaltyStructure.local(p)
    else:
        raise DataValidationError(f"Unknown logistic prior '{name}'; expected one of {LOGISTIC_PRIORS}")
    return PriorSpec.from_structure(structure, VariancePrior.half_cauchy(scale),
                                    Sigma2Prior(kind='fixed', value=1.0))


def _logistic_chain(X: np.ndarray, y: np.ndarray, prior: PriorSpec, cfg: McmcConfig,
                    chain: int) -> Dict[str, np.ndarray]:
    rng = child_rng(cfg.seed, STREAM_CHAIN, chain)
    n, p1 = X.shape
    p = p1 - 1
    kappa_x = X.T @ (y - 0.5)

    updater = ScaleUpdater(prior)
    tau2, nu = updater.initial()
    theta = np.zeros(p1)
    omega = np.empty(n)

    keep = cfg.kept_per_chain
    out = {
        'beta0': np.empty(keep), 'beta': np.empty((keep, p)), 'sigma2': np.ones(keep),
        'tau2': np.empty((keep, updater.n_groups)), 'nu': np.empty((keep, updater.n_groups)),
    }
    slot = 0
    for it in range(cfg.iterations):
        eta = np.clip(X @ theta, -ETA_CLIP, ETA_CLIP)
        random_polyagamma(1, eta, out=omega, random_state=rng)
        np.clip(omega, 1e-8, None, out=omega)

        prec = np.concatenate([[0.0], updater.precision(tau2)])
        A = (X * omega[:, None]).T @ X + np.diag(prec)
        try:
            L = linalg.cholesky(A, lower=True)
        except linalg.LinAlgError:
            raise EstimationError("Augmented coefficient precision matrix is singular")
        mean = linalg.cho_solve((L, True), kappa_x)
        theta = mean + linalg.solve_triangular(L, rng.standard_normal(p1), lower=True, trans='T')

        updater.update(theta[1:], 1.0, tau2, nu, rng)

        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            out['beta0'][slot] = theta[0]
            out['beta'][slot] = theta[1:]
            out['tau2'][slot] = tau2
            out['nu'][slot] = nu
            slot += 1
    return out


def fit_logistic_bayes(d: Dataset, prior='glo', cfg: McmcConfig = None,
                       scale: float = LOGISTIC_SCALE, method_tag: str = None,
                       n_jobs: Optional[int] = None) -> PosteriorDraws:
    """
    Posterior draws for a shrinkage-prior logistic model.

    ``prior`` is 'glo', 'loc' or a ready PriorSpec. The returned draws carry
    sigma2 identically 1.
    """
    check_binary(d)
    cfg = cfg or McmcConfig()
    if not math.isfinite(scale) or scale <= 0:
        raise DataValidationError(f"Half-Cauchy scale must be positive; got {scale}")
    if isinstance(prior, str):
        method_tag = method_tag or prior
        prior = logistic_prior(prior, d.p, scale)
    if prior.structure.p != d.p:
        raise DimensionMismatchError(f"Prior structure covers {prior.structure.p} covariates; dataset has {d.p}")

    chains = run_chains(_logistic_chain, cfg, augment(np.asarray(d.X)), np.asarray(d.y, dtype=np.float64), prior,
                        n_jobs=n_jobs)
    draws = PosteriorDraws(
        chains=cfg.chains,
        method_tag=method_tag or 'bayes',
        structure=prior.structure,
        column_names=d.column_names,
        details={'prior': prior.to_dict(), 'mcmc': cfg.to_dict(), 'family': 'binomial'},
        **stack_chains(chains),
    )
    logger.debug(f"{draws.method_tag} logistic on '{d.name}': {draws.n_draws} draws")
    return with_diagnostics(draws)
