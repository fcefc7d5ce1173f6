import numpy as np
import pandas as pd
from django.test import tag

from bayes_shrink.priors import McmcConfig
from core.tests.base import ShrinkageTestCase, gaussian_dataset
from evaluation.metrics import coverage, msep
from runs.harness import method_seed, score
from runs.methods import MethodSpec, fit_method, predict_method
from simgen.registry import LINEAR, LOGISTIC
from simgen.scenarios import INTRO_GROUPS, intro_scenario, logistic_scenario, simulate_linear, simulate_logistic
from simgen.subsets import diy_scenario


LINEAR_MCMC = McmcConfig(chains=2, iterations=1500, burn_in=500)
LOGISTIC_MCMC = McmcConfig(chains=2, iterations=2000, burn_in=1000)


def study(draw, family, specs, replicates, seed=1):
    """One scored row per (replicate, method), fitted the way the harness fits jobs."""
    rows = []
    for r in range(replicates):
        rep = draw(r)
        for spec in specs:
            fitted = fit_method(spec, family, rep.train, method_seed(seed, r, spec.tag))
            row = score(predict_method(fitted, rep.test.X, 0.95, spec.corrected), rep, family, 'true', False)
            row['method'] = spec.tag
            rows.append(row)
    return pd.DataFrame(rows)


@tag('slow')
class IntroStudyTests(ShrinkageTestCase):

    def test_grouped_methods_beat_single_penalty_ridge(self):
        s = intro_scenario()
        specs = [
            MethodSpec('ridge', 'ridge'),
            MethodSpec('ridge_2', 'ridge_2', groups=INTRO_GROUPS),
            MethodSpec('bayes-2', 'bayes-2', groups=INTRO_GROUPS, mcmc=LINEAR_MCMC),
        ]
        frame = study(lambda r: simulate_linear(s, 11, r), LINEAR, specs, replicates=200)
        means = frame.groupby('method')['msep'].mean()
        self.assertLess(means['ridge_2'], means['ridge'])
        self.assertLess(means['bayes-2'], means['ridge'])

    def test_equal_signal_costs_ridge_2_nothing(self):
        s = intro_scenario(equal=True)
        specs = [MethodSpec('ridge', 'ridge'), MethodSpec('ridge_2', 'ridge_2', groups=INTRO_GROUPS)]
        frame = study(lambda r: simulate_linear(s, 12, r), LINEAR, specs, replicates=200)
        means = frame.groupby('method')['msep'].mean()
        self.assertLessEqual(means['ridge_2'], 1.1 * means['ridge'])

    def test_corrected_intervals_cover_more(self):
        s = intro_scenario()
        spec = MethodSpec('ridge_2', 'ridge_2', groups=INTRO_GROUPS)
        corrected, plain = [], []
        for r in range(100):
            rep = simulate_linear(s, 13, r)
            fitted = fit_method(spec, LINEAR, rep.train, method_seed(13, r, spec.tag))
            corrected.append(coverage(predict_method(fitted, rep.test.X, 0.95, True).intervals, rep.eta_true)[0])
            plain.append(coverage(predict_method(fitted, rep.test.X, 0.95, False).intervals, rep.eta_true)[0])
        self.assertGreater(np.mean(corrected), np.mean(plain))


@tag('slow')
class LogisticStudyTests(ShrinkageTestCase):

    def run_signal(self, signal, specs, seed):
        s = logistic_scenario(signal)
        return study(lambda r: simulate_logistic(s, seed, r), LOGISTIC, specs, replicates=60, seed=seed)

    def test_cross_validated_ridge_overshrinks_moderate_signal(self):
        frame = self.run_signal('moderate', [MethodSpec('firth', 'firth'), MethodSpec('ridgecv', 'ridgecv')], 21)
        medians = frame.groupby('method')['cslope_winsorized'].median()
        self.assertLess(medians['ridgecv'], medians['firth'])

    def test_local_prior_beats_firth_on_weak_signal(self):
        specs = [MethodSpec('firth', 'firth'), MethodSpec('bayes-loc', 'bayes-loc', mcmc=LOGISTIC_MCMC)]
        frame = self.run_signal('weak', specs, 22)
        means = frame.groupby('method')['msep'].mean()
        self.assertLess(means['bayes-loc'], means['firth'])

    def test_fixed_ridge_overshrinks_strong_signal(self):
        specs = [MethodSpec('ridge05', 'ridge05'), MethodSpec('bayes-loc', 'bayes-loc', mcmc=LOGISTIC_MCMC)]
        frame = self.run_signal('strong', specs, 23)
        medians = frame.groupby('method')['cslope_winsorized'].median()
        self.assertLess(medians['ridge05'], medians['bayes-loc'])


@tag('slow')
class DiyStudyTests(ShrinkageTestCase):

    def test_empirical_bayes_tracks_ridge(self):
        diy = diy_scenario(gaussian_dataset(80, [0.6, -0.4, 0.2, 0.0, 0.1], seed=19), 'ols', replicates=30, seed=6)
        specs = [MethodSpec('ridge', 'ridge'), MethodSpec('bayes-eb', 'bayes-eb', mcmc=LINEAR_MCMC)]
        scores = {spec.tag: [] for spec in specs}
        for r in range(30):
            rep = diy.replicate(r)
            for spec in specs:
                fitted = fit_method(spec, LINEAR, rep.train, method_seed(6, r, spec.tag))
                scores[spec.tag].append(msep(rep.eta_true, predict_method(fitted, rep.test.X, 0.95).eta_hat))
        ridge, eb = np.mean(scores['ridge']), np.mean(scores['bayes-eb'])
        self.assertLess(abs(eb - ridge), 0.1 * ridge)
