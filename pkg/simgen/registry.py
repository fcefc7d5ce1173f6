"""
Named scenarios for the batch harness.

A scenario source turns a replicate index into a Replicate. Synthetic
scenarios draw from the data stream of that index; dataset scenarios
index into precomputed subsets or bootstrap responses.
"""
import logging
from typing import Any, Callable, Dict, Optional, Sequence

from core.data import Dataset
from core.exceptions import DataValidationError
from freq_linear.ols import fit_ols

from .scenarios import (
    LinearScenario, LogisticScenario, Replicate, intro_scenario, logistic_scenario,
    simulate_linear, simulate_logistic,
)
from .subsets import SubsetPlan, diy_scenario, subset_rows


logger = logging.getLogger(__name__)

LINEAR = 'linear'
LOGISTIC = 'logistic'

LINEAR_OVERRIDES = ('n_train', 'n_test', 'correlation', 'sigma2', 'intercept')
LOGISTIC_OVERRIDES = ('signal', 'n', 'n_train', 'n_test', 'correlation', 'extra_nulls', 'target_rate')


class ScenarioSource:
    family = LINEAR
    groups: Sequence[Sequence[int]] = ()

    def __init__(self, name: str, replicates: int, seed: int):
        self.name = name
        self.replicates = replicates
        self.seed = seed

    @property
    def n_jobs(self) -> int:
        return self.replicates

    def get(self, r: int) -> Replicate:
        raise NotImplementedError

    def n_train(self, r: int) -> int:
        raise NotImplementedError

    def describe(self) -> Dict[str, Any]:
        return {'name': self.name, 'family': self.family, 'replicates': self.n_jobs}


class LinearSource(ScenarioSource):
    def __init__(self, scenario: LinearScenario, replicates: int, seed: int):
        super().__init__(scenario.name, replicates, seed)
        self.scenario = scenario
        self.groups = [list(g) for g in scenario.groups]

    def get(self, r):
        return simulate_linear(self.scenario, self.seed, r)

    def n_train(self, r):
        return self.scenario.n_train

    def describe(self):
        return dict(super().describe(), scenario=self.scenario.to_dict())


class LogisticSource(ScenarioSource):
    family = LOGISTIC

    def __init__(self, scenario: LogisticScenario, replicates: int, seed: int):
        super().__init__(scenario.name, replicates, seed)
        self.scenario = scenario

    def get(self, r):
        return simulate_logistic(self.scenario, self.seed, r)

    def n_train(self, r):
        return self.scenario.n

    def describe(self):
        return dict(super().describe(), scenario=self.scenario.to_dict(), intercept=self.scenario.intercept)


class SubsetSource(ScenarioSource):
    """Training subsets of a large dataset; the full-data OLS fit is the truth."""

    def __init__(self, source: Dataset, sizes: Sequence[int], replicates: int, seed: int,
                 disjoint: bool = False, groups: Sequence[Sequence[int]] = ()):
        super().__init__('subsets', replicates, seed)
        self.plan = SubsetPlan(source, tuple(sizes), replicates, seed, disjoint)
        self.splits = subset_rows(self.plan)
        self.benchmark = fit_ols(source)
        self.groups = [list(g) for g in groups]
        logger.info(f"Subset study on '{source.name}': {len(self.splits)} split(s), sizes {self.plan.subset_sizes}")

    @property
    def n_jobs(self):
        return len(self.splits)

    def get(self, r):
        split = self.splits[r]
        src = self.plan.source
        size = self.plan.subset_sizes[split.size_index]
        train = src.take(split.train_rows, name=f'{src.name}-n{size}-{split.replicate}-train')
        test = src.take(split.test_rows, name=f'{src.name}-n{size}-{split.replicate}-test')
        eta = self.benchmark.intercept + test.X @ self.benchmark.beta
        truth = {'intercept': self.benchmark.intercept, 'beta': self.benchmark.beta.tolist(),
                 'sigma2': self.benchmark.sigma2, 'train_rows': split.train_rows.tolist()}
        return Replicate(train, test, eta, None, truth)

    def n_train(self, r):
        return self.plan.subset_sizes[self.splits[r].size_index]

    def describe(self):
        return dict(super().describe(), subset_sizes=list(self.plan.subset_sizes),
                    disjoint=self.plan.disjoint, source_n=self.plan.source.n, source_p=self.plan.source.p)


class DiySource(ScenarioSource):
    def __init__(self, design: Dataset, fit_method: str, replicates: int, seed: int,
                 groups: Sequence[Sequence[int]] = (), mcmc=None):
        super().__init__('diy', replicates, seed)
        self.diy = diy_scenario(design, fit_method, replicates, seed, cfg=mcmc)
        self.groups = [list(g) for g in groups]

    def get(self, r):
        return self.diy.replicate(r)

    def n_train(self, r):
        return self.diy.design.n

    def describe(self):
        return dict(super().describe(), fit_method=self.diy.fit_method, sigma2=self.diy.sigma2,
                    intercept=self.diy.intercept, beta=self.diy.beta.tolist())


def _pick(params: Dict[str, Any], allowed: Sequence[str]) -> Dict[str, Any]:
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise DataValidationError(f"Unsupported scenario parameter(s): {', '.join(unknown)}")
    return dict(params)


def _linear(equal: bool):
    def build(params, replicates, seed, dataset=None, **_):
        return LinearSource(intro_scenario(equal, **_pick(params, LINEAR_OVERRIDES)), replicates, seed)
    return build


def _logistic(signal: Optional[str] = None, suffix: Optional[str] = None, **fixed):
    def build(params, replicates, seed, dataset=None, **_):
        params = _pick(params, LOGISTIC_OVERRIDES)
        if 'n_train' in params:
            params['n'] = params.pop('n_train')
        chosen = params.pop('signal', signal or 'moderate')
        name = f'logistic-{suffix}-{chosen}' if suffix else f'logistic-{chosen}'
        scenario = logistic_scenario(chosen, name=name, **dict(fixed, **params))
        return LogisticSource(scenario, replicates, seed)
    return build


def _needs_dataset(name, dataset):
    if dataset is None:
        raise DataValidationError(f"Scenario '{name}' needs a dataset")


def _subsets(params, replicates, seed, dataset=None, groups=(), **_):
    _needs_dataset('subsets', dataset)
    params = _pick(params, ('subset_sizes', 'disjoint'))
    sizes = params.get('subset_sizes', (50, 200))
    return SubsetSource(dataset, sizes, replicates, seed, bool(params.get('disjoint', False)), groups)


def _diy(params, replicates, seed, dataset=None, groups=(), mcmc=None, **_):
    _needs_dataset('diy', dataset)
    params = _pick(params, ('fit_method',))
    return DiySource(dataset, params.get('fit_method', 'bayes-loc'), replicates, seed, groups, mcmc)


SCENARIOS: Dict[str, Callable[..., ScenarioSource]] = {
    'intro': _linear(False),
    'intro-equal': _linear(True),
    'logistic-weak': _logistic('weak'),
    'logistic-moderate': _logistic('moderate'),
    'logistic-strong': _logistic('strong'),
    'logistic-n100': _logistic(suffix='n100', n=100),
    'logistic-zeros': _logistic(suffix='zeros', extra_nulls=5),
    'subsets': _subsets,
    'diy': _diy,
}
DATASET_SCENARIOS = ('subsets', 'diy')


def build_source(name: str, params: Optional[Dict[str, Any]], replicates: int, seed: int,
                 dataset: Optional[Dataset] = None, groups: Sequence[Sequence[int]] = (),
                 mcmc=None) -> ScenarioSource:
    try:
        factory = SCENARIOS[name]
    except KeyError:
        raise DataValidationError(f"Unknown scenario '{name}'; expected one of {tuple(SCENARIOS)}")
    return factory(params or {}, replicates, seed, dataset=dataset, groups=groups, mcmc=mcmc)
