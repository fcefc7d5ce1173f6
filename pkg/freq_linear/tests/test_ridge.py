import numpy as np

from core.exceptions import PenaltyOptimizationError
from core.structure import GroupMode, PenaltyStructure
from core.tests.base import ShrinkageTestCase, gaussian_dataset, make_dataset, orthonormal_dataset
from freq_linear.intervals import predict_with_intervals
from freq_linear.ols import fit_ols
from freq_linear.ridge import RidgeSpec, correct_for_penalty_uncertainty, fit_ridge_ml, ridge_criterion
from freq_linear.variants import ridge_structure


def fixed_spec(p, lam, **kwargs):
    return RidgeSpec(structure=PenaltyStructure.global_(p, GroupMode.fixed(lam)), **kwargs)


class FixedPenaltyTests(ShrinkageTestCase):

    def test_zero_penalty_is_ols(self):
        d = self.small
        fit = fit_ridge_ml(d, fixed_spec(d.p, 0.0))
        ols = fit_ols(d)
        self.assertArrayClose(fit.beta, ols.beta, atol=1e-8)
        self.assertAlmostEqual(fit.intercept, ols.intercept, delta=1e-8)

    def test_orthonormal_closed_form(self):
        d = orthonormal_dataset(40, 5, seed=3)
        lam = 2.5
        fit = fit_ridge_ml(d, fixed_spec(d.p, lam))
        self.assertArrayClose(fit.beta, d.X.T @ d.y / (1.0 + lam), atol=1e-8)
        self.assertAlmostEqual(fit.intercept, float(d.y.mean()), delta=1e-10)

    def test_norm_decreases_with_penalty(self):
        d = self.small
        norms = [np.linalg.norm(fit_ridge_ml(d, fixed_spec(d.p, lam)).beta) for lam in (0.01, 0.1, 1, 10, 100)]
        self.assertTrue(all(a >= b for a, b in zip(norms, norms[1:])))

    def test_unpenalized_group_converges_to_subset_ols(self):
        d = gaussian_dataset(60, [1.0, -1.0, 0.5, 0.5, 0.5], seed=12)
        structure = PenaltyStructure.from_groups(
            5, [[0, 1], [2, 3, 4]], [GroupMode.unpenalized(), GroupMode.fixed(1e8)],
        )
        fit = fit_ridge_ml(d, RidgeSpec(structure=structure))
        sub = fit_ols(make_dataset(d.X[:, :2], d.y))
        self.assertArrayClose(fit.beta[:2], sub.beta, atol=1e-4)
        self.assertEqual(fit.lam[0], 0.0)

    def test_all_fixed_correction_is_identity(self):
        d = self.small
        fit = fit_ridge_ml(d, fixed_spec(d.p, 3.0))
        self.assertArrayClose(fit.cov_theta_corrected, fit.cov_theta, atol=0)
        self.assertFalse(fit.correction_fallback)


class EstimatedPenaltyTests(ShrinkageTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        rng = np.random.default_rng(31)
        cls.data = gaussian_dataset(50, rng.normal(0.0, 0.5, 8), seed=32)
        cls.spec = RidgeSpec(structure=PenaltyStructure.global_(8))
        cls.fit = fit_ridge_ml(cls.data, cls.spec)

    def test_matches_dense_grid_search(self):
        grid = np.linspace(-8.0, 12.0, 200)
        values = [ridge_criterion(self.data, self.spec, [r]) for r in grid]
        best = grid[int(np.argmax(values))]
        self.assertLess(abs(float(self.fit.log_lambda[0]) - best), 0.06)

    def test_criterion_beats_audit_grid(self):
        value = ridge_criterion(self.data, self.spec, self.fit.log_lambda)
        self.assertAlmostEqual(value, self.fit.details['criterion'], places=8)
        for r in np.linspace(-10.0, 14.0, 50):
            self.assertGreaterEqual(value, ridge_criterion(self.data, self.spec, [r]) - 1e-6)

    def test_optimizers_agree(self):
        for optimizer in ('grid', 'newton'):
            spec = RidgeSpec(structure=PenaltyStructure.global_(8), optimizer=optimizer, grid_points=481)
            other = fit_ridge_ml(self.data, spec)
            self.assertAlmostEqual(float(other.log_lambda[0]), float(self.fit.log_lambda[0]), delta=0.06)

    def test_ml_criterion_option(self):
        spec = RidgeSpec(structure=PenaltyStructure.global_(8), criterion='ml')
        fit = fit_ridge_ml(self.data, spec)
        self.assertEqual(fit.details['criterion_kind'], 'ml')
        self.assertTrue(np.isfinite(fit.log_lambda[0]))

    def test_iteration_cap_reports_best_point(self):
        spec = RidgeSpec(structure=PenaltyStructure.global_(8), max_iter=1, restarts=1)
        with self.assertRaises(PenaltyOptimizationError) as ctx:
            fit_ridge_ml(self.data, spec)
        self.assertEqual(len(ctx.exception.best_log_lambda), 1)
        self.assertTrue(np.isfinite(ctx.exception.best_value))

    def test_corrected_intervals_never_narrower(self):
        X_test = np.random.default_rng(4).standard_normal((100, 8))
        plain = predict_with_intervals(self.fit, X_test, use_corrected=False)
        corrected = predict_with_intervals(self.fit, X_test, use_corrected=True)
        self.assertTrue(np.all(corrected.width >= plain.width - 1e-10))


class GroupedPenaltyTests(ShrinkageTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.data = gaussian_dataset(80, [0.05, -0.05, 0.05, 0.05, -0.05, 0.8, -0.6], seed=41)
        cls.spec = RidgeSpec(structure=ridge_structure('ridge_2', 7, groups=[[0, 1, 2, 3, 4]]), method_tag='ridge_2')
        cls.fit = fit_ridge_ml(cls.data, cls.spec)

    def test_weak_group_shrunk_harder(self):
        self.assertGreater(self.fit.lam[0], self.fit.lam[1])

    def test_audit_grid_per_group(self):
        rho = np.array(self.fit.log_lambda)
        value = ridge_criterion(self.data, self.spec, rho)
        for g in range(2):
            for r in np.linspace(-10.0, 14.0, 50):
                trial = rho.copy()
                trial[g] = r
                self.assertGreaterEqual(value, ridge_criterion(self.data, self.spec, trial) - 1e-6)

    def test_correction_is_recomputable(self):
        again = correct_for_penalty_uncertainty(self.fit.evolve(cov_theta_corrected=None), self.data)
        if not self.fit.correction_fallback:
            self.assertArrayClose(again.cov_theta_corrected, self.fit.cov_theta_corrected, atol=1e-12)

    def test_unpenalized_first_group(self):
        spec = RidgeSpec(structure=ridge_structure('ridge_2un', 7, groups=[[5, 6]]), method_tag='ridge_2un')
        fit = fit_ridge_ml(self.data, spec)
        self.assertEqual(fit.lam[0], 0.0)
        self.assertEqual(fit.structure.n_groups, 2)


class GroupDecouplingTests(ShrinkageTestCase):

    def test_other_group_scale_leaves_penalty_unchanged(self):
        Q = orthonormal_dataset(60, 4, seed=7).X
        noise = np.random.default_rng(8).standard_normal(60)
        spec = RidgeSpec(structure=PenaltyStructure.from_groups(4, [[0, 1], [2, 3]]))
        first = []
        for factor in (1.0, 4.0):
            y = Q[:, :2] @ [3.0, -2.0] + factor * (Q[:, 2:] @ [2.0, 1.5]) + noise
            fit = fit_ridge_ml(make_dataset(Q, y), spec)
            first.append(float(fit.log_lambda[0]))
        self.assertAlmostEqual(first[0], first[1], delta=0.05)
