"""
Prior and sampler configuration.

Coefficient prior: beta_k ~ N(0, sigma2 * tau2_g(k)) with tau2_g = 1 / lambda_g.
Each group's tau2 is either fixed, inverse-gamma or half-Cauchy on
tau = sqrt(tau2). A fixed lambda of 0 gives a flat prior.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from django.conf import settings

from core.data import Dataset
from core.exceptions import DataValidationError
from core.structure import FIXED, UNPENALIZED, PenaltyStructure
from freq_linear.variants import complete_groups

from .eb import estimate_lambda_eb


logger = logging.getLogger(__name__)

FIXED_PRIOR = 'fixed'
INVERSE_GAMMA = 'inverse-gamma'
HALF_CAUCHY = 'half-cauchy'
JEFFREYS = 'jeffreys'

IG_DEFAULT = 0.001
LOGISTIC_SCALE = math.sqrt(0.5)

LADDER = ('eb', 'ig', 'glo', 'grouped', 'loc')


@dataclass(frozen=True)
class VariancePrior:
    kind: str
    value: Optional[float] = None
    a: float = IG_DEFAULT
    b: float = IG_DEFAULT
    scale: float = 1.0

    def __post_init__(self):
        if self.kind == FIXED_PRIOR:
            if self.value is None or not math.isfinite(self.value) or self.value < 0:
                raise DataValidationError(f"Fixed lambda must be finite and >= 0; got {self.value}")
        elif self.kind == INVERSE_GAMMA:
            if self.a <= 0 or self.b <= 0:
                raise DataValidationError("Inverse-gamma prior needs a > 0 and b > 0")
        elif self.kind == HALF_CAUCHY:
            if not self.scale > 0:
                raise DataValidationError(f"Half-Cauchy scale must be positive; got {self.scale}")
        else:
            raise DataValidationError(f"Unknown variance prior '{self.kind}'")

    @classmethod
    def fixed(cls, lam: float) -> 'VariancePrior':
        return cls(FIXED_PRIOR, value=float(lam))

    @classmethod
    def inverse_gamma(cls, a: float = IG_DEFAULT, b: float = IG_DEFAULT) -> 'VariancePrior':
        return cls(INVERSE_GAMMA, a=float(a), b=float(b))

    @classmethod
    def half_cauchy(cls, scale: float = 1.0) -> 'VariancePrior':
        return cls(HALF_CAUCHY, scale=float(scale))

    @property
    def is_flat(self) -> bool:
        return self.kind == FIXED_PRIOR and self.value == 0.0

    def to_dict(self):
        if self.kind == FIXED_PRIOR:
            return {'kind': self.kind, 'lambda': self.value}
        if self.kind == INVERSE_GAMMA:
            return {'kind': self.kind, 'a': self.a, 'b': self.b}
        return {'kind': self.kind, 'scale': self.scale}


@dataclass(frozen=True)
class Sigma2Prior:
    kind: str = JEFFREYS
    a: float = IG_DEFAULT
    b: float = IG_DEFAULT
    value: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (JEFFREYS, INVERSE_GAMMA, FIXED_PRIOR):
            raise DataValidationError(f"Unknown sigma2 prior '{self.kind}'")
        if self.kind == FIXED_PRIOR and not (self.value is not None and self.value > 0):
            raise DataValidationError("Fixed sigma2 must be positive")
        if self.kind == INVERSE_GAMMA and (self.a <= 0 or self.b <= 0):
            raise DataValidationError("Inverse-gamma prior needs a > 0 and b > 0")

    def to_dict(self):
        return {'kind': self.kind, 'a': self.a, 'b': self.b, 'value': self.value}


@dataclass(frozen=True)
class PriorSpec:
    """Per-group variance priors over a penalty structure plus the sigma2 prior."""

    structure: PenaltyStructure
    group_priors: Tuple[VariancePrior, ...]
    sigma2_prior: Sigma2Prior = Sigma2Prior()

    def __post_init__(self):
        priors = tuple(self.group_priors)
        object.__setattr__(self, 'group_priors', priors)
        if len(priors) != self.structure.n_groups:
            raise DataValidationError(f"{len(priors)} group priors for {self.structure.n_groups} groups")

    @classmethod
    def from_structure(cls, structure: PenaltyStructure, estimated: VariancePrior,
                       sigma2_prior: Optional[Sigma2Prior] = None) -> 'PriorSpec':
        """Estimated groups get ``estimated``; fixed and unpenalized groups keep their lambda."""
        priors = []
        for mode in structure.modes:
            if mode.kind == UNPENALIZED:
                priors.append(VariancePrior.fixed(0.0))
            elif mode.kind == FIXED:
                priors.append(VariancePrior.fixed(mode.value))
            else:
                priors.append(estimated)
        return cls(structure, tuple(priors), sigma2_prior or Sigma2Prior())

    def to_dict(self):
        return {
            'structure': self.structure.to_dict(),
            'group_priors': [g.to_dict() for g in self.group_priors],
            'sigma2_prior': self.sigma2_prior.to_dict(),
        }


@dataclass(frozen=True)
class McmcConfig:
    chains: int = None
    iterations: int = None
    burn_in: int = None
    thin: int = None
    seed: int = 0

    def __post_init__(self):
        for name, setting, default in (
            ('chains', 'MCMC_CHAINS', 4),
            ('iterations', 'MCMC_ITERATIONS', 5000),
            ('burn_in', 'MCMC_BURN_IN', 2500),
            ('thin', 'MCMC_THIN', 1),
        ):
            if getattr(self, name) is None:
                object.__setattr__(self, name, int(getattr(settings, setting, default)))

        if self.chains < 1 or self.thin < 1:
            raise DataValidationError("MCMC needs chains >= 1 and thin >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise DataValidationError(
                f"Burn-in ({self.burn_in}) must be >= 0 and below iterations ({self.iterations})"
            )
        if (self.iterations - self.burn_in) % self.thin:
            raise DataValidationError("iterations - burn_in must be a multiple of thin")

    @property
    def kept_per_chain(self) -> int:
        return (self.iterations - self.burn_in) // self.thin

    @property
    def total_draws(self) -> int:
        return self.chains * self.kept_per_chain

    def with_seed(self, seed: int) -> 'McmcConfig':
        return McmcConfig(self.chains, self.iterations, self.burn_in, self.thin, seed)

    def to_dict(self):
        return {'chains': self.chains, 'iterations': self.iterations,
                'burn_in': self.burn_in, 'thin': self.thin, 'seed': self.seed}


def prior_ladder(name: str, d: Dataset, groups: Optional[Sequence[Sequence[int]]] = None,
                 scale: float = 1.0, eb_lambda: Optional[float] = None) -> PriorSpec:
    """
    Named prior configurations.

        eb       one fixed lambda at its marginal-likelihood estimate
        ig       one inverse-gamma(0.001, 0.001) variance
        glo      one half-Cauchy(0, scale) standard deviation
        grouped  one half-Cauchy per declared group
        loc      one half-Cauchy per coefficient
    """
    p = d.p
    if name == 'eb':
        if eb_lambda is None:
            eb_lambda = estimate_lambda_eb(d)
        return PriorSpec(PenaltyStructure.global_(p), (VariancePrior.fixed(eb_lambda),))
    if name == 'ig':
        return PriorSpec(PenaltyStructure.global_(p), (VariancePrior.inverse_gamma(),))
    if name == 'glo':
        return PriorSpec(PenaltyStructure.global_(p), (VariancePrior.half_cauchy(scale),))
    if name == 'loc':
        s = PenaltyStructure.local(p)
        return PriorSpec(s, (VariancePrior.half_cauchy(scale),) * p)
    if name == 'grouped':
        if not groups:
            raise DataValidationError("Grouped prior needs a group specification")
        s = PenaltyStructure.from_groups(p, complete_groups(p, groups))
        return PriorSpec(s, (VariancePrior.half_cauchy(scale),) * s.n_groups)
    raise DataValidationError(f"Unknown prior '{name}'; expected one of {LADDER}")
