import numpy as np
from django.test import tag

from core.exceptions import DimensionMismatchError
from core.tests.base import ShrinkageTestCase, gaussian_dataset
from freq_linear.intervals import predict_with_intervals
from freq_linear.ols import fit_ols
from freq_linear.variants import ridge_structure


class PredictWithIntervalsTests(ShrinkageTestCase):

    def test_vanishing_level_collapses_to_point(self):
        ps = predict_with_intervals(fit_ols(self.small), self.small.X, level=1e-12)
        self.assertTrue(np.all(ps.width < 1e-9))

    def test_nested_in_level(self):
        fit = fit_ols(self.small)
        narrow = predict_with_intervals(fit, self.small.X, level=0.5)
        wide = predict_with_intervals(fit, self.small.X, level=0.95)
        self.assertTrue(np.all(wide.lower <= narrow.lower))
        self.assertTrue(np.all(wide.upper >= narrow.upper))

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            predict_with_intervals(fit_ols(self.small), np.ones((2, 2)))

    @tag('slow')
    def test_ols_coverage_under_correct_model(self):
        beta = np.array([0.5, -0.25, 1.0])
        X_test = np.random.default_rng(100).standard_normal((20, 3))
        eta = 0.3 + X_test @ beta
        hits = []
        for rep in range(2000):
            d = gaussian_dataset(200, beta, intercept=0.3, seed=1000 + rep)
            ps = predict_with_intervals(fit_ols(d), X_test, level=0.95)
            hits.append(np.mean((ps.lower <= eta) & (eta <= ps.upper)))
        self.assertAlmostEqual(float(np.mean(hits)), 0.95, delta=0.015)


class VariantStructureTests(ShrinkageTestCase):

    def test_declared_groups_get_trailing_rest(self):
        s = ridge_structure('ridge_3', 6, groups=[[0, 1], [2]])
        self.assertEqual(list(s.sizes()), [2, 1, 3])

    def test_random_groups_rerandomize(self):
        rng = np.random.default_rng(0)
        draws = {ridge_structure('ridge_2r', 17, rng=rng).group_of for _ in range(5)}
        self.assertGreater(len(draws), 1)
