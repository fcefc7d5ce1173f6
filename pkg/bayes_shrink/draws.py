"""
Posterior draws, convergence diagnostics and posterior predictions.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Sequence, Tuple

import arviz as az
import numpy as np
import pandas as pd
from django.conf import settings

from core.data import check_design
from core.exceptions import DataValidationError, DimensionMismatchError, EstimationError
from core.results import PredictionSet
from core.structure import PenaltyStructure
from core.validators import parse_level


logger = logging.getLogger(__name__)

RHAT_WARNING = 1.1
SUMMARY_QUANTILES = (0.025, 0.5, 0.975)


def _frozen(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise DimensionMismatchError(f"Expected {ndim}-dimensional draws; got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PosteriorDraws:
    """
    Retained MCMC draws, stacked chain by chain.

    ``tau2`` holds prior-variance scales (tau2_g = 1 / lambda_g); flat groups
    are +inf. ``nu`` holds the half-Cauchy mixture auxiliaries (NaN for
    groups without one).
    """

    beta0: np.ndarray
    beta: np.ndarray
    sigma2: np.ndarray
    tau2: np.ndarray
    nu: np.ndarray
    chains: int
    method_tag: str = 'bayes'
    structure: Optional[PenaltyStructure] = None
    column_names: Tuple[str, ...] = ()
    diagnostics: Dict[str, Dict[str, float]] = field(default_factory=dict)
    diagnostics_warning: bool = False
    details: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name, ndim in (('beta0', 1), ('beta', 2), ('sigma2', 1), ('tau2', 2), ('nu', 2)):
            object.__setattr__(self, name, _frozen(getattr(self, name), ndim))
        D = self.beta0.shape[0]
        if any(a.shape[0] != D for a in (self.beta, self.sigma2, self.tau2, self.nu)):
            raise DimensionMismatchError("Draw arrays differ in length")
        if self.chains < 1 or D % self.chains:
            raise DataValidationError(f"{D} draws cannot be split into {self.chains} chains")
        if not np.all(self.sigma2 > 0) or not np.all(self.tau2 > 0):
            raise DataValidationError("sigma2 and tau2 draws must be positive")
        if self.structure is not None and self.structure.p != self.p:
            raise DimensionMismatchError("Penalty structure does not match beta draws")
        if not self.column_names:
            object.__setattr__(self, 'column_names', tuple(f'x{j + 1}' for j in range(self.p)))

    @property
    def n_draws(self) -> int:
        return self.beta0.shape[0]

    @property
    def p(self) -> int:
        return self.beta.shape[1]

    @property
    def n_groups(self) -> int:
        return self.tau2.shape[1]

    @property
    def per_chain(self) -> int:
        return self.n_draws // self.chains

    @property
    def lambda_draws(self) -> np.ndarray:
        return 1.0 / self.tau2

    def by_chain(self, values: np.ndarray) -> np.ndarray:
        """Reshape stacked draws to (chain, draw, ...)."""
        return np.asarray(values).reshape((self.chains, self.per_chain) + np.asarray(values).shape[1:])

    @property
    def posterior_log_lambda(self) -> np.ndarray:
        """Posterior median of log lambda per group."""
        with np.errstate(divide='ignore'):
            return np.median(-np.log(self.tau2), axis=0)

    def parameters(self) -> Dict[str, np.ndarray]:
        """Named 1-d draw vectors for every scalar parameter."""
        params = {'beta0': self.beta0}
        for j, name in enumerate(self.column_names):
            params[f'beta[{name}]'] = self.beta[:, j]
        params['sigma2'] = self.sigma2
        for g in range(self.n_groups):
            params[f'tau2[{g + 1}]'] = self.tau2[:, g]
        return params


def compute_diagnostics(draws: PosteriorDraws) -> Tuple[Dict[str, Dict[str, float]], bool]:
    """
    Bulk ESS and split R-hat per parameter.

    Parameters without variation (fixed values) get NaN. Any finite R-hat
    above RHAT_WARNING sets the warning flag.
    """
    out = {}
    warning = False
    for name, values in draws.parameters().items():
        chains = draws.by_chain(values)
        if not np.all(np.isfinite(chains)) or np.ptp(chains) == 0.0:
            out[name] = {'ess': float('nan'), 'rhat': float('nan')}
            continue
        ess = float(az.ess(chains, method='bulk'))
        rhat = float(az.rhat(chains, method='split'))
        out[name] = {'ess': ess, 'rhat': rhat}
        if np.isfinite(rhat) and rhat > RHAT_WARNING:
            warning = True
    return out, warning


def with_diagnostics(draws: PosteriorDraws) -> PosteriorDraws:
    diagnostics, warning = compute_diagnostics(draws)
    if warning:
        worst = max((v['rhat'] for v in diagnostics.values() if np.isfinite(v['rhat'])), default=float('nan'))
        logger.warning(f"{draws.method_tag}: split R-hat up to {worst:.3f} exceeds {RHAT_WARNING}")
    return replace(draws, diagnostics=diagnostics, diagnostics_warning=warning)


def posterior_predict(draws: PosteriorDraws, X_test, level: float = 0.95) -> PredictionSet:
    """
    Posterior mean and equal-tailed credible bounds of the linear predictor.

    Rows are processed in chunks of PREDICTION_CHUNK_ROWS so memory stays at
    draws x chunk. Bounds use linearly interpolated empirical quantiles and
    are widened to contain the mean when a skewed posterior puts it outside.
    """
    level = parse_level(level)
    if draws.n_draws == 0:
        raise EstimationError("No posterior draws")
    X = check_design(X_test, draws.p)
    chunk = max(int(getattr(settings, 'PREDICTION_CHUNK_ROWS', 512)), 1)
    probs = [(1.0 - level) / 2.0, (1.0 + level) / 2.0]

    eta_hat = np.empty(X.shape[0])
    lower = np.empty(X.shape[0])
    upper = np.empty(X.shape[0])
    for start in range(0, X.shape[0], chunk):
        rows = slice(start, start + chunk)
        eta = draws.beta0[:, None] + draws.beta @ X[rows].T
        eta_hat[rows] = eta.mean(axis=0)
        lo, hi = np.quantile(eta, probs, axis=0, method='linear')
        lower[rows] = np.minimum(lo, eta_hat[rows])
        upper[rows] = np.maximum(hi, eta_hat[rows])
    return PredictionSet(eta_hat=eta_hat, lower=lower, upper=upper, level=level)


def summarize_draws(draws: PosteriorDraws) -> pd.DataFrame:
    """
    One row per parameter: mean, sd, 2.5/50/97.5% quantiles, ESS and R-hat.

    Penalties are also summarized as log lambda per group.
    """
    diagnostics = draws.diagnostics or compute_diagnostics(draws)[0]
    rows = []
    params = dict(draws.parameters())
    with np.errstate(divide='ignore'):
        for g in range(draws.n_groups):
            params[f'log_lambda[{g + 1}]'] = -np.log(draws.tau2[:, g])
    for name, values in params.items():
        q = np.quantile(values, SUMMARY_QUANTILES) if np.all(np.isfinite(values)) else [np.nan] * 3
        diag = diagnostics.get(name, {})
        rows.append({
            'parameter': name,
            'mean': float(np.mean(values)),
            'sd': float(np.std(values, ddof=1)) if values.shape[0] > 1 else float('nan'),
            'q2.5': float(q[0]),
            'q50': float(q[1]),
            'q97.5': float(q[2]),
            'ess': diag.get('ess', float('nan')),
            'rhat': diag.get('rhat', float('nan')),
        })
    return pd.DataFrame(rows).set_index('parameter')


def draws_to_frame(draws: PosteriorDraws) -> pd.DataFrame:
    """One row per retained draw, with chain and within-chain index."""
    frame = pd.DataFrame({
        'chain': np.repeat(np.arange(draws.chains), draws.per_chain),
        'draw': np.tile(np.arange(draws.per_chain), draws.chains),
        'beta0': draws.beta0,
    })
    for j, name in enumerate(draws.column_names):
        frame[f'beta[{name}]'] = draws.beta[:, j]
    frame['sigma2'] = draws.sigma2
    for g in range(draws.n_groups):
        frame[f'tau2[{g + 1}]'] = draws.tau2[:, g]
        frame[f'nu[{g + 1}]'] = draws.nu[:, g]
    return frame


def stack_chains(chains: Sequence[Dict[str, np.ndarray]]) -> Dict[str, np.ndarray]:
    return {key: np.concatenate([c[key] for c in chains], axis=0) for key in chains[0]}
