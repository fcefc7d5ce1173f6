"""
Replication protocols on a real dataset: training subsets with
complementary test sets, and parametric bootstrap ("do it yourself")
responses on the real design.
"""
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import numpy as np

from bayes_shrink.gibbs import gibbs_linear
from bayes_shrink.priors import McmcConfig, prior_ladder
from core.data import Dataset
from core.exceptions import DataValidationError
from core.rng import STREAM_DIY, STREAM_SUBSETS, child_rng
from freq_linear.ols import fit_ols

from .scenarios import Replicate


logger = logging.getLogger(__name__)

DIY_METHODS = ('ols', 'bayes-loc')


@dataclass(frozen=True)
class SubsetPlan:
    """
    ``replicates`` training subsets for each size in ``subset_sizes``.

    Overlapping mode draws each subset independently without replacement;
    disjoint mode partitions one permutation of the rows per size.
    """

    source: Dataset
    subset_sizes: Tuple[int, ...]
    replicates: int
    seed: int
    disjoint: bool = False

    def __post_init__(self):
        sizes = (self.subset_sizes,) if isinstance(self.subset_sizes, int) else self.subset_sizes
        object.__setattr__(self, 'subset_sizes', tuple(int(s) for s in sizes))
        if not self.subset_sizes or self.replicates < 1:
            raise DataValidationError("A subset plan needs at least one size and one replicate")
        n = self.source.n
        for size in self.subset_sizes:
            if not 1 <= size < n:
                raise DataValidationError(
                    f"Subset size {size} leaves no test rows in a source of {n} rows"
                )
            if self.disjoint and size * self.replicates > n:
                raise DataValidationError(
                    f"{self.replicates} disjoint subsets of {size} rows need {size * self.replicates} "
                    f"rows; source has {n}"
                )


class Split(NamedTuple):
    size_index: int
    replicate: int
    train_rows: np.ndarray
    test_rows: np.ndarray


def subset_rows(plan: SubsetPlan) -> List[Split]:
    """Row indices of every (size, replicate) split, in size-major order."""
    n = plan.source.n
    splits = []
    for k, size in enumerate(plan.subset_sizes):
        if plan.disjoint:
            order = child_rng(plan.seed, STREAM_SUBSETS, k).permutation(n)
        for r in range(plan.replicates):
            if plan.disjoint:
                train = np.sort(order[r * size:(r + 1) * size])
            else:
                rng = child_rng(plan.seed, STREAM_SUBSETS, k, r)
                train = np.sort(rng.choice(n, size=size, replace=False))
            mask = np.ones(n, dtype=bool)
            mask[train] = False
            splits.append(Split(k, r, train, np.flatnonzero(mask)))
    return splits


def split_subsets(plan: SubsetPlan) -> List[Tuple[Dataset, Dataset]]:
    """(train, test) datasets for every split; test holds all remaining rows."""
    src = plan.source
    return [
        (src.take(s.train_rows, name=f'{src.name}-n{plan.subset_sizes[s.size_index]}-{s.replicate}-train'),
         src.take(s.test_rows, name=f'{src.name}-n{plan.subset_sizes[s.size_index]}-{s.replicate}-test'))
        for s in subset_rows(plan)
    ]


@dataclass(frozen=True)
class DiyScenario:
    """Fitted generating model on a real design plus the simulated responses."""

    design: Dataset
    intercept: float
    beta: np.ndarray
    sigma2: float
    fit_method: str
    datasets: Tuple[Dataset, ...]

    @property
    def eta_true(self) -> np.ndarray:
        return self.intercept + self.design.X @ self.beta

    def replicate(self, r: int) -> Replicate:
        """Train on simulated responses; evaluate against the generating predictor on the same design."""
        truth = {'intercept': self.intercept, 'beta': self.beta.tolist(), 'sigma2': self.sigma2,
                 'fit_method': self.fit_method}
        return Replicate(self.datasets[r], self.design, self.eta_true, None, truth)


def _generating_model(d: Dataset, fit_method: str, seed: int, cfg: McmcConfig = None):
    if fit_method == 'ols':
        fit = fit_ols(d)
        return fit.intercept, np.asarray(fit.beta), fit.sigma2
    if fit_method == 'bayes-loc':
        cfg = (cfg or McmcConfig()).with_seed(seed)
        draws = gibbs_linear(d, prior_ladder('loc', d), cfg, method_tag='bayes-loc')
        return float(draws.beta0.mean()), draws.beta.mean(axis=0), float(draws.sigma2.mean())
    raise DataValidationError(f"Unknown generating method '{fit_method}'; expected one of {DIY_METHODS}")


def diy_scenario(d: Dataset, fit_method: str = 'bayes-loc', replicates: int = 100, seed: int = 0,
                 cfg: McmcConfig = None, sigma2: float = None) -> DiyScenario:
    """
    Parametric bootstrap on the real design.

    The chosen method is fitted once; every replicate then draws
    y* = b0 + X b + N(0, s2) from its own stream (seed, replicate).
    ``sigma2`` overrides the fitted noise variance.
    """
    if replicates < 1:
        raise DataValidationError("DIY scenario needs at least one replicate")
    intercept, beta, fitted_sigma2 = _generating_model(d, fit_method, seed, cfg)
    s2 = fitted_sigma2 if sigma2 is None else float(sigma2)
    if s2 < 0:
        raise DataValidationError("sigma2 must be >= 0")
    fitted = intercept + d.X @ beta
    datasets = tuple(
        d.with_response(fitted + np.sqrt(s2) * child_rng(seed, STREAM_DIY, r).standard_normal(d.n),
                        name=f'{d.name}-diy-{r}')
        for r in range(replicates)
    )
    logger.info(f"DIY scenario on '{d.name}' from {fit_method}: {replicates} replicate(s), sigma2={s2:.4g}")
    return DiyScenario(d, float(intercept), np.asarray(beta, dtype=np.float64), s2, fit_method, datasets)
