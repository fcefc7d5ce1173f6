
import numpy as np
from django.test import tag
from scipy.special import expit, logit

from core.exceptions import DataValidationError
from core.tests.base import ShrinkageTestCase
from evaluation.metrics import msep
from freq_linear.ols import fit_ols
from simgen.scenarios import (
    INTRO_BETA, LinearScenario, LogisticScenario, equicorrelated_normal, intro_scenario,
    logistic_scenario, simulate_linear, simulate_logistic, solve_intercept,
)


class LinearScenarioTests(ShrinkageTestCase):

    def test_intro_layout(self):
        s = intro_scenario()
        self.assertEqual(s.beta, INTRO_BETA)
        self.assertEqual((s.n_train, s.n_test, s.sigma2), (50, 1000, 1.0))
        rep = simulate_linear(s, seed=1)
        self.assertEqual(rep.train.X.shape, (50, 7))
        self.assertEqual(rep.test.X.shape, (1000, 7))
        self.assertTrue(set(np.unique(rep.train.X[:, 6])) <= {-1.0, 1.0})
        self.assertArrayClose(rep.eta_true, rep.test.X @ np.array(INTRO_BETA))

    def test_equal_variant_has_common_magnitude(self):
        self.assertTrue(np.allclose(np.abs(intro_scenario(equal=True).beta), 0.1))

    def test_noiseless_ols_recovers_truth(self):
        s = LinearScenario(beta=(1.0, -2.0, 0.5), intercept=0.3, sigma2=0.0, n_train=20, n_test=100)
        rep = simulate_linear(s, seed=4)
        fit = fit_ols(rep.train)
        self.assertLess(msep(rep.eta_true, fit.intercept + rep.test.X @ fit.beta), 1e-10)

    def test_replicates_are_reproducible_and_distinct(self):
        s = intro_scenario()
        a, b, c = simulate_linear(s, 9, 0), simulate_linear(s, 9, 0), simulate_linear(s, 9, 1)
        self.assertTrue(np.array_equal(a.train.y, b.train.y))
        self.assertFalse(np.array_equal(a.train.y, c.train.y))

    def test_invalid_scenarios(self):
        with self.assertRaises(DataValidationError):
            LinearScenario(beta=(1.0,), sigma2=-1.0)
        with self.assertRaises(DataValidationError):
            LinearScenario(beta=(1.0, 1.0), treatment_index=2)
        with self.assertRaises(DataValidationError):
            LinearScenario(beta=(1.0, 1.0, 1.0), correlation=-0.6)


class EquicorrelationTests(ShrinkageTestCase):

    def test_pairwise_correlation(self):
        X = equicorrelated_normal(100_000, 5, 0.5, np.random.default_rng(1))
        corr = np.corrcoef(X, rowvar=False)
        off = corr[~np.eye(5, dtype=bool)]
        self.assertTrue(np.all(np.abs(off - 0.5) < 0.02))
        self.assertTrue(np.all(np.abs(X.var(axis=0) - 1.0) < 0.02))

    def test_negative_correlation(self):
        X = equicorrelated_normal(100_000, 3, -0.3, np.random.default_rng(2))
        self.assertAlmostEqual(np.corrcoef(X[:, 0], X[:, 2])[0, 1], -0.3, delta=0.02)


class InterceptTests(ShrinkageTestCase):

    def test_symmetric_target_gives_zero(self):
        moderate = tuple(LogisticScenario().effective_beta)
        self.assertAlmostEqual(solve_intercept(moderate, 0.5, 0.5), 0.0, delta=0.01)
        self.assertAlmostEqual(solve_intercept(tuple(3 * np.array(moderate)), 0.5, 0.5), 0.0, delta=0.01)

    def test_null_coefficients_give_logit(self):
        self.assertAlmostEqual(solve_intercept((0.0, 0.0), 0.5, 0.25), logit(0.25), delta=1e-6)

    def test_rate_is_hit(self):
        beta = np.array([0.4, -0.2, 0.8])
        b0 = solve_intercept(tuple(beta), 0.5, 0.2)
        X = equicorrelated_normal(400_000, 3, 0.5, np.random.default_rng(7))
        self.assertAlmostEqual(float(np.mean(expit(b0 + X @ beta))), 0.2, delta=0.005)

    def test_invalid_target(self):
        with self.assertRaises(DataValidationError):
            solve_intercept((1.0,), 0.5, 1.0)


class LogisticScenarioTests(ShrinkageTestCase):

    def test_signal_factors(self):
        base = np.array([0.2, 0.2, 0.2, 0.5, 0.8])
        self.assertArrayClose(logistic_scenario('weak').effective_beta, base / 3)
        self.assertArrayClose(logistic_scenario('strong').effective_beta, base * 3)

    def test_extra_nulls(self):
        s = logistic_scenario('moderate', extra_nulls=5)
        self.assertEqual(s.p, 10)
        rep = simulate_logistic(s, seed=3)
        self.assertEqual(rep.train.X.shape, (50, 10))
        self.assertArrayClose(rep.p_true, expit(rep.eta_true))

    @tag('slow')
    def test_five_events_per_covariate_on_average(self):
        s = logistic_scenario('moderate')
        events = [simulate_logistic(s, seed=11, replicate=r).train.y.sum() for r in range(400)]
        self.assertAlmostEqual(np.mean(events) / 5, 5.0, delta=0.3)

    def test_unknown_signal(self):
        with self.assertRaises(DataValidationError):
            LogisticScenario(signal='huge')
