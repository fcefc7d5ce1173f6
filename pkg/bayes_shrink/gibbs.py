"""
Gibbs sampler for the Bayesian linear model with grouped shrinkage priors.

One scan updates, in order:
    beta     jointly, N(A^-1 X'y, sigma2 A^-1), A = X'X + diag(1/tau2), centered data
    beta0    N(ybar - xbar'beta, sigma2 / n) under a flat prior
    sigma2   inverse-gamma (Jeffreys, inverse-gamma or frozen)
    tau2, nu per group: half-Cauchy via its inverse-gamma scale mixture,
             conjugate inverse-gamma, or frozen
"""
import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
from django.conf import settings
from joblib import Parallel, delayed
from scipy import linalg

from core.data import Dataset
from core.exceptions import DimensionMismatchError, EstimationError
from core.rng import STREAM_CHAIN, child_rng

from .draws import PosteriorDraws, stack_chains, with_diagnostics
from .priors import FIXED_PRIOR, HALF_CAUCHY, INVERSE_GAMMA, McmcConfig, PriorSpec, Sigma2Prior


logger = logging.getLogger(__name__)


def draw_inverse_gamma(shape, rate, rng: np.random.Generator):
    """InvGamma(shape, rate) draws, broadcasting over arrays."""
    size = np.broadcast(np.asarray(shape), np.asarray(rate)).shape
    return np.asarray(rate) / rng.gamma(shape, 1.0, size=size or None)


class ScaleUpdater:
    """Per-group tau2 (and nu) updates for a PriorSpec."""

    def __init__(self, prior: PriorSpec):
        structure = prior.structure
        self.group_index = structure.group_index
        self.sizes = structure.sizes().astype(np.float64)
        self.n_groups = structure.n_groups
        kinds = [g.kind for g in prior.group_priors]
        self.hc = np.array([k == HALF_CAUCHY for k in kinds])
        self.ig = np.array([k == INVERSE_GAMMA for k in kinds])
        self.hc_scale2 = np.array([g.scale ** 2 for g in prior.group_priors])
        self.ig_a = np.array([g.a for g in prior.group_priors])
        self.ig_b = np.array([g.b for g in prior.group_priors])
        self.fixed_tau2 = np.array([
            (math.inf if g.value == 0.0 else 1.0 / g.value) if g.kind == FIXED_PRIOR else np.nan
            for g in prior.group_priors
        ])
        tau2_coef = np.where(np.isnan(self.fixed_tau2), 1.0, self.fixed_tau2)[self.group_index]
        self.penalized = np.isfinite(tau2_coef)

    def initial(self) -> Tuple[np.ndarray, np.ndarray]:
        tau2 = np.where(np.isnan(self.fixed_tau2), 1.0, self.fixed_tau2)
        tau2[self.hc] = self.hc_scale2[self.hc]
        nu = np.where(self.hc, self.hc_scale2, np.nan)
        return tau2, nu

    def precision(self, tau2: np.ndarray) -> np.ndarray:
        """Per-coefficient prior precision 1 / tau2 (0 for flat groups)."""
        return 1.0 / tau2[self.group_index]

    def update(self, beta: np.ndarray, sigma2: float, tau2: np.ndarray, nu: np.ndarray,
               rng: np.random.Generator):
        ss = np.bincount(self.group_index, weights=beta ** 2, minlength=self.n_groups) / (2.0 * sigma2)
        if self.hc.any():
            h = self.hc
            tau2[h] = draw_inverse_gamma((self.sizes[h] + 1.0) / 2.0, 1.0 / nu[h] + ss[h], rng)
            nu[h] = draw_inverse_gamma(1.0, 1.0 / self.hc_scale2[h] + 1.0 / tau2[h], rng)
        if self.ig.any():
            g = self.ig
            tau2[g] = draw_inverse_gamma(self.ig_a[g] + self.sizes[g] / 2.0, self.ig_b[g] + ss[g], rng)


def draw_sigma2(rss: float, penalty: float, n: int, p_penalized: int, prior: Sigma2Prior,
                rng: np.random.Generator) -> float:
    """Full conditional of sigma2 given beta0, beta and tau2."""
    shape = (n + p_penalized) / 2.0
    rate = (rss + penalty) / 2.0
    if prior.kind == INVERSE_GAMMA:
        shape += prior.a
        rate += prior.b
    return float(draw_inverse_gamma(shape, rate, rng))


def _linear_chain(X: np.ndarray, y: np.ndarray, prior: PriorSpec, cfg: McmcConfig,
                  chain: int) -> Dict[str, np.ndarray]:
    rng = child_rng(cfg.seed, STREAM_CHAIN, chain)
    n, p = X.shape
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    XtX = Xc.T @ Xc
    Xty = Xc.T @ (y - y_mean)

    updater = ScaleUpdater(prior)
    tau2, nu = updater.initial()
    p_penalized = int(updater.penalized.sum())
    sigma2_prior = prior.sigma2_prior
    frozen_sigma2 = sigma2_prior.kind == FIXED_PRIOR
    sigma2 = sigma2_prior.value if frozen_sigma2 else max(float(np.var(y)), 1e-8)

    keep = cfg.kept_per_chain
    out = {
        'beta0': np.empty(keep), 'beta': np.empty((keep, p)), 'sigma2': np.empty(keep),
        'tau2': np.empty((keep, updater.n_groups)), 'nu': np.empty((keep, updater.n_groups)),
    }
    slot = 0
    for it in range(cfg.iterations):
        prec = updater.precision(tau2)
        A = XtX + np.diag(prec)
        try:
            L = linalg.cholesky(A, lower=True)
        except linalg.LinAlgError:
            raise EstimationError("Coefficient precision matrix is singular")
        mean = linalg.cho_solve((L, True), Xty)
        z = rng.standard_normal(p)
        beta = mean + math.sqrt(sigma2) * linalg.solve_triangular(L, z, lower=True, trans='T')
        beta0 = y_mean - x_mean @ beta + math.sqrt(sigma2 / n) * rng.standard_normal()

        if not frozen_sigma2:
            resid = y - beta0 - X @ beta
            pen = updater.penalized
            penalty = float(np.sum(beta[pen] ** 2 * prec[pen]))
            sigma2 = draw_sigma2(float(resid @ resid), penalty, n, p_penalized, sigma2_prior, rng)

        updater.update(beta, sigma2, tau2, nu, rng)

        if it >= cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            out['beta0'][slot] = beta0
            out['beta'][slot] = beta
            out['sigma2'][slot] = sigma2
            out['tau2'][slot] = tau2
            out['nu'][slot] = nu
            slot += 1
    return out


def run_chains(chain_fn, cfg: McmcConfig, *args, n_jobs: Optional[int] = None):
    """Run ``chain_fn(*args, cfg, chain)`` for every chain; results in chain order."""
    n_jobs = n_jobs or int(getattr(settings, 'MCMC_CHAIN_JOBS', 1))
    return Parallel(n_jobs=n_jobs)(delayed(chain_fn)(*args, cfg, c) for c in range(cfg.chains))


def gibbs_linear(d: Dataset, prior: PriorSpec, cfg: McmcConfig, method_tag: str = 'bayes',
                 n_jobs: Optional[int] = None) -> PosteriorDraws:
    """
    Posterior draws for (beta0, beta, sigma2, tau2, nu).

    Chains use child streams (seed, chain) of ``cfg.seed`` so draws do not
    depend on how many chain workers run (``n_jobs``, default
    MCMC_CHAIN_JOBS). A split R-hat above 1.1 on any parameter sets
    ``diagnostics_warning``.
    """
    if prior.structure.p != d.p:
        raise DimensionMismatchError(f"Prior structure covers {prior.structure.p} covariates; dataset has {d.p}")
    chains = run_chains(_linear_chain, cfg, np.asarray(d.X), np.asarray(d.y), prior, n_jobs=n_jobs)
    stacked = stack_chains(chains)
    draws = PosteriorDraws(
        chains=cfg.chains,
        method_tag=method_tag,
        structure=prior.structure,
        column_names=d.column_names,
        details={'prior': prior.to_dict(), 'mcmc': cfg.to_dict()},
        **stacked,
    )
    logger.debug(f"{method_tag} on '{d.name}': {draws.n_draws} draws from {cfg.chains} chain(s)")
    return with_diagnostics(draws)


def sample_half_cauchy_prior(scale: float, draws: int, rng: np.random.Generator,
                             chains: int = 1000, burn_in: int = 50) -> Tuple[np.ndarray, np.ndarray]:
    """
    Run the (tau2, nu) scale-mixture pair with no data.

    Many short chains are advanced in lockstep; after burn-in their states are
    pooled. tau = sqrt(tau2) is then marginally half-Cauchy(0, scale).

    Returns:
        (tau2 draws, nu draws), each of length ``draws``
    """
    if not scale > 0 or draws < 1:
        raise ValueError("Need scale > 0 and draws >= 1")
    chains = min(chains, draws)
    per_chain = -(-draws // chains)
    s2 = scale ** 2
    tau2 = np.full(chains, s2)
    nu = np.full(chains, s2)
    kept_tau2, kept_nu = [], []
    for it in range(burn_in + per_chain):
        tau2 = draw_inverse_gamma(0.5, 1.0 / nu, rng)
        nu = draw_inverse_gamma(1.0, 1.0 / s2 + 1.0 / tau2, rng)
        if it >= burn_in:
            kept_tau2.append(tau2)
            kept_nu.append(nu)
    return np.concatenate(kept_tau2)[:draws], np.concatenate(kept_nu)[:draws]
