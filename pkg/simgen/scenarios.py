"""
Synthetic linear and logistic scenarios.

Each simulated replicate carries its truth (coefficients, linear predictor
and, for logistic scenarios, probabilities on the test set) so evaluation
never re-derives it.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, NamedTuple, Optional, Tuple

import numpy as np
from scipy import optimize
from scipy.special import expit

from core.data import Dataset, simulated_columns
from core.exceptions import DataValidationError, EstimationError
from core.rng import STREAM_DATA, child_rng


logger = logging.getLogger(__name__)

IID_NORMAL = 'iid-standard-normal'
FROM_DATASET = 'from-dataset'

SIGNAL_FACTORS = {'weak': 1.0 / 3.0, 'moderate': 1.0, 'strong': 3.0}
LOGISTIC_BETA = (0.2, 0.2, 0.2, 0.5, 0.8)
INTRO_BETA = (-0.05, -0.05, -0.05, 0.05, 0.05, 0.05, -0.25)
INTRO_EQUAL_BETA = (-0.1, -0.1, -0.1, 0.1, 0.1, 0.1, -0.1)
INTRO_TREATMENT = 6
INTRO_GROUPS = ((0, 1, 2, 3, 4, 5), (6,))

INTERCEPT_DRAWS = 1_000_000
INTERCEPT_SEED = 20_240_229
INTERCEPT_BRACKET = (-20.0, 20.0)
INTERCEPT_TOLERANCE = 0.002


class Replicate(NamedTuple):
    train: Dataset
    test: Dataset
    eta_true: np.ndarray
    p_true: Optional[np.ndarray] = None
    truth: Dict[str, Any] = {}


@dataclass(frozen=True)
class LinearScenario:
    """Gaussian linear model with i.i.d. (or equicorrelated) standard-normal covariates."""

    beta: Tuple[float, ...]
    intercept: float = 0.0
    sigma2: float = 1.0
    n_train: int = 50
    n_test: int = 1000
    treatment_index: Optional[int] = None
    correlation: float = 0.0
    groups: Tuple[Tuple[int, ...], ...] = ()
    design: str = IID_NORMAL
    name: str = 'linear'

    def __post_init__(self):
        object.__setattr__(self, 'beta', tuple(float(b) for b in self.beta))
        object.__setattr__(self, 'groups', tuple(tuple(int(k) for k in g) for g in self.groups))
        if self.design != IID_NORMAL:
            raise DataValidationError(f"LinearScenario only simulates '{IID_NORMAL}' designs")
        if not self.sigma2 >= 0:
            raise DataValidationError(f"sigma2 must be >= 0; got {self.sigma2}")
        if self.n_train < 1 or self.n_test < 1:
            raise DataValidationError("n_train and n_test must be positive")
        if self.treatment_index is not None and not 0 <= self.treatment_index < self.p:
            raise DataValidationError(f"Treatment index {self.treatment_index} out of range")
        _check_correlation(self.correlation, self.p)

    @property
    def p(self) -> int:
        return len(self.beta)

    def to_dict(self):
        return {
            'name': self.name, 'beta': list(self.beta), 'intercept': self.intercept,
            'sigma2': self.sigma2, 'n_train': self.n_train, 'n_test': self.n_test,
            'treatment_index': self.treatment_index, 'correlation': self.correlation,
            'groups': [list(g) for g in self.groups], 'design': self.design,
        }


@dataclass(frozen=True)
class LogisticScenario:
    """
    Bernoulli outcomes with equicorrelated Gaussian covariates.

    The effective coefficients are ``beta`` times the signal factor, followed
    by ``extra_nulls`` zeros. The intercept is tuned to ``target_rate``.
    """

    beta: Tuple[float, ...] = LOGISTIC_BETA
    signal: str = 'moderate'
    n: int = 50
    n_test: int = 5000
    correlation: float = 0.5
    target_rate: float = 0.5
    extra_nulls: int = 0
    name: str = 'logistic'

    def __post_init__(self):
        object.__setattr__(self, 'beta', tuple(float(b) for b in self.beta))
        if self.signal not in SIGNAL_FACTORS:
            raise DataValidationError(f"Unknown signal '{self.signal}'; expected one of {tuple(SIGNAL_FACTORS)}")
        if self.extra_nulls < 0:
            raise DataValidationError("extra_nulls must be >= 0")
        if not 0.0 < self.target_rate < 1.0:
            raise DataValidationError(f"Target event rate must lie in (0, 1); got {self.target_rate}")
        if self.n < 1 or self.n_test < 1:
            raise DataValidationError("n and n_test must be positive")
        _check_correlation(self.correlation, self.p)

    @property
    def effective_beta(self) -> np.ndarray:
        factor = SIGNAL_FACTORS[self.signal]
        return np.concatenate([np.asarray(self.beta) * factor, np.zeros(self.extra_nulls)])

    @property
    def p(self) -> int:
        return len(self.beta) + self.extra_nulls

    @property
    def intercept(self) -> float:
        return solve_intercept(tuple(self.effective_beta), self.correlation, self.target_rate)

    def to_dict(self):
        return {
            'name': self.name, 'beta': list(self.beta), 'signal': self.signal, 'n': self.n,
            'n_test': self.n_test, 'correlation': self.correlation, 'target_rate': self.target_rate,
            'extra_nulls': self.extra_nulls,
        }


def _check_correlation(rho: float, p: int):
    if not -1.0 < rho < 1.0:
        raise DataValidationError(f"Correlation must lie in (-1, 1); got {rho}")
    if rho < 0 and p > 1 and rho <= -1.0 / (p - 1):
        raise DataValidationError(f"Equicorrelation {rho} is not positive definite for p={p}")


def equicorrelated_normal(n: int, p: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """
    Standard-normal columns with common pairwise correlation ``rho``.

    For rho >= 0: X_j = sqrt(rho) Z_0 + sqrt(1 - rho) Z_j with one shared
    factor Z_0. Negative rho goes through the Cholesky factor instead.
    """
    if rho == 0.0:
        return rng.standard_normal((n, p))
    if rho > 0.0:
        shared = rng.standard_normal((n, 1))
        return np.sqrt(rho) * shared + np.sqrt(1.0 - rho) * rng.standard_normal((n, p))
    cov = np.full((p, p), rho) + np.eye(p) * (1.0 - rho)
    return rng.standard_normal((n, p)) @ np.linalg.cholesky(cov).T


@lru_cache(maxsize=64)
def solve_intercept(beta: Tuple[float, ...], correlation: float, target_rate: float) -> float:
    """
    Intercept giving mean event probability ``target_rate``.

    E[expit(b0 + X beta)] is estimated on 10^6 draws of a fixed internal
    stream and solved for b0 by bisection on [-20, 20].
    """
    if not 0.0 < target_rate < 1.0:
        raise DataValidationError(f"Target event rate must lie in (0, 1); got {target_rate}")
    beta = np.asarray(beta, dtype=np.float64)
    p = beta.shape[0]
    _check_correlation(correlation, p)
    # X beta is exactly normal with variance beta' Sigma beta
    variance = (1.0 - correlation) * float(beta @ beta) + correlation * float(beta.sum()) ** 2
    z = child_rng(INTERCEPT_SEED).standard_normal(INTERCEPT_DRAWS) * np.sqrt(max(variance, 0.0))

    def excess(b0):
        return float(np.mean(expit(b0 + z))) - target_rate

    lo, hi = INTERCEPT_BRACKET
    if excess(lo) > 0 or excess(hi) < 0:
        raise EstimationError(f"Event rate {target_rate} is not reachable with an intercept in {INTERCEPT_BRACKET}")
    b0 = optimize.bisect(excess, lo, hi, xtol=1e-8)
    if abs(excess(b0)) > INTERCEPT_TOLERANCE:
        raise EstimationError(f"Intercept search stopped {excess(b0):+.4f} away from the target rate")
    logger.debug(f"Intercept {b0:.4f} for target rate {target_rate}")
    return float(b0)


def _linear_design(s: LinearScenario, n: int, rng: np.random.Generator) -> np.ndarray:
    X = equicorrelated_normal(n, s.p, s.correlation, rng)
    if s.treatment_index is not None:
        X[:, s.treatment_index] = 2.0 * rng.integers(0, 2, size=n) - 1.0
    return X


def simulate_linear(s: LinearScenario, seed: int, replicate: int = 0) -> Replicate:
    """
    One training set and one test set from the linear scenario.

    Draws come from the data stream (seed, replicate). The treatment column,
    when flagged, is a balanced +-1 variable.
    """
    rng = child_rng(seed, STREAM_DATA, replicate)
    beta = np.asarray(s.beta)
    binary = () if s.treatment_index is None else (s.treatment_index,)
    columns = simulated_columns(s.p, binary=binary)

    X_train = _linear_design(s, s.n_train, rng)
    X_test = _linear_design(s, s.n_test, rng)
    eta_train = s.intercept + X_train @ beta
    eta_test = s.intercept + X_test @ beta
    sd = np.sqrt(s.sigma2)
    y_train = eta_train + sd * rng.standard_normal(s.n_train)
    y_test = eta_test + sd * rng.standard_normal(s.n_test)

    train = Dataset(y=y_train, X=X_train, columns=columns, name=f'{s.name}-{replicate}-train')
    test = Dataset(y=y_test, X=X_test, columns=columns, name=f'{s.name}-{replicate}-test')
    truth = {'intercept': s.intercept, 'beta': beta.tolist(), 'sigma2': s.sigma2}
    return Replicate(train, test, eta_test, None, truth)


def simulate_logistic(s: LogisticScenario, seed: int, replicate: int = 0) -> Replicate:
    rng = child_rng(seed, STREAM_DATA, replicate)
    beta = s.effective_beta
    b0 = s.intercept
    columns = simulated_columns(s.p)

    def draw(n, label):
        X = equicorrelated_normal(n, s.p, s.correlation, rng)
        eta = b0 + X @ beta
        prob = expit(eta)
        y = (rng.uniform(size=n) < prob).astype(np.float64)
        return Dataset(y=y, X=X, columns=columns, name=f'{s.name}-{replicate}-{label}'), eta, prob

    train, _, _ = draw(s.n, 'train')
    test, eta_test, p_test = draw(s.n_test, 'test')
    truth = {'intercept': b0, 'beta': beta.tolist(), 'signal': s.signal}
    return Replicate(train, test, eta_test, p_test, truth)


def intro_scenario(equal: bool = False, **overrides) -> LinearScenario:
    """The seven-covariate Gaussian scenario with a strong +-1 treatment effect."""
    params = {
        'beta': INTRO_EQUAL_BETA if equal else INTRO_BETA,
        'treatment_index': INTRO_TREATMENT,
        'groups': INTRO_GROUPS,
        'name': 'intro-equal' if equal else 'intro',
    }
    params.update(overrides)
    return LinearScenario(**params)


def logistic_scenario(signal: str = 'moderate', **overrides) -> LogisticScenario:
    params = {'signal': signal, 'name': f'logistic-{signal}'}
    params.update(overrides)
    return LogisticScenario(**params)
