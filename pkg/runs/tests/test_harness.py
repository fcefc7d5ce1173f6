import filecmp
import json
import os
import tempfile
from unittest import mock

from django.test import tag
from rest_framework.exceptions import ValidationError

from bayes_shrink.priors import McmcConfig
from core.tests.base import ShrinkageTestCase
from evaluation.report import RECORD_COLUMNS, read_records
from runs.harness import build_plan, execute, method_seed, validate_config
from runs.methods import MethodSpec, fit_method, predict_method


def plan_for(**overrides):
    data = {'scenario': 'intro', 'methods': [{'tag': 'ols'}], 'seed': 1, 'replicates': 1}
    data.update(overrides)
    return build_plan(validate_config(data))


class HarnessTests(ShrinkageTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def out(self, name):
        return os.path.join(self.tmp.name, name)

    def test_single_ols_replicate_gives_one_row(self):
        outcome = execute(plan_for(), self.out('a'))
        self.assertEqual(len(outcome.records), 1)
        self.assertEqual(outcome.failures, 0)
        for name in ('records.csv', 'aggregates.json', 'manifest.json'):
            self.assertTrue(os.path.exists(os.path.join(self.out('a'), name)))
        records = read_records(os.path.join(self.out('a'), 'records.csv'))
        self.assertEqual(list(records.columns), list(RECORD_COLUMNS))
        self.assertGreater(records['coverage'].iloc[0], 0.0)

    def test_rerun_is_byte_identical(self):
        plan = plan_for(methods=[{'tag': 'ols'}, {'tag': 'ridge'}, {'tag': 'lasso', 'folds': 5}], replicates=3)
        execute(plan, self.out('a'))
        execute(plan_for(methods=[{'tag': 'ols'}, {'tag': 'ridge'}, {'tag': 'lasso', 'folds': 5}], replicates=3),
                self.out('b'))
        for name in ('records.csv', 'aggregates.json', 'manifest.json'):
            self.assertTrue(filecmp.cmp(os.path.join(self.out('a'), name), os.path.join(self.out('b'), name),
                                        shallow=False), name)

    @tag('slow')
    def test_parallelism_does_not_change_results(self):
        methods = [{'tag': 'ridge'}, {'tag': 'ridge_2'}]
        execute(plan_for(methods=methods, replicates=4), self.out('serial'), parallelism=1)
        execute(plan_for(methods=methods, replicates=4), self.out('pool'), parallelism=2)
        for name in ('records.csv', 'aggregates.json', 'manifest.json'):
            self.assertTrue(filecmp.cmp(os.path.join(self.out('serial'), name),
                                        os.path.join(self.out('pool'), name), shallow=False), name)

    def test_failed_jobs_are_recorded(self):
        plan = plan_for(scenario_params={'n_train': 8}, replicates=2)
        outcome = execute(plan, self.out('f'))
        self.assertEqual(outcome.failures, 2)
        self.assertTrue(outcome.records['error'].str.startswith('EstimationError').all())
        self.assertTrue(outcome.records['msep'].isna().all())
        with open(os.path.join(self.out('f'), 'manifest.json')) as fh:
            self.assertEqual(json.load(fh)['failures'], 2)

    def test_unexpected_errors_keep_the_run(self):
        plan = plan_for(methods=[{'tag': 'ols'}, {'tag': 'ridge'}], replicates=2)
        with mock.patch('runs.harness.fit_method', side_effect=ValueError('singular design')):
            outcome = execute(plan, self.out('v'), parallelism=1)
        self.assertEqual(outcome.failures, 4)
        self.assertTrue(outcome.records['error'].str.startswith('ValueError: singular design').all())
        for name in ('records.csv', 'aggregates.json', 'manifest.json'):
            self.assertTrue(os.path.exists(os.path.join(self.out('v'), name)))
        with open(os.path.join(self.out('v'), 'aggregates.json')) as fh:
            groups = json.load(fh)['groups']
        self.assertEqual([g['failures'] for g in groups], [2, 2])

    def test_group_index_out_of_range(self):
        with self.assertRaises(ValidationError) as ctx:
            plan_for(methods=[{'tag': 'ridge_2', 'groups': [[0, 9]]}])
        self.assertIn('methods.0.groups.0', ctx.exception.detail)
        self.assertIn('9', str(ctx.exception.detail['methods.0.groups.0']))

    def test_logistic_records_carry_winsorized_slope(self):
        plan = plan_for(scenario='logistic-moderate', methods=[{'tag': 'firth'}, {'tag': 'ridge05'}],
                        scenario_params={'n_test': 500}, replicates=2)
        outcome = execute(plan, self.out('l'))
        self.assertEqual(outcome.failures, 0)
        slopes = outcome.records['cslope_winsorized']
        self.assertTrue(((slopes >= 1 / 3) & (slopes <= 3)).all())
        self.assertTrue(outcome.records['coverage'].isna().all())

    def test_method_seeds_depend_on_tag_not_position(self):
        self.assertEqual(method_seed(5, 2, 'ridge'), method_seed(5, 2, 'ridge'))
        self.assertNotEqual(method_seed(5, 2, 'ridge'), method_seed(5, 2, 'ridge_2'))


class MethodRegistryTests(ShrinkageTestCase):

    def test_bayes_outcome_has_intervals_and_penalties(self):
        spec = MethodSpec(tag='bayes-glo', method='bayes-glo', mcmc=McmcConfig(chains=1, iterations=300, burn_in=100))
        fitted = fit_method(spec, 'linear', self.small, seed=3)
        outcome = predict_method(fitted, self.small.X[:5], 0.9)
        self.assertEqual(outcome.intervals.level, 0.9)
        self.assertEqual(outcome.log_lambda.shape, (1,))
        self.assertIn('diagnostics_warning', outcome.flags)

    def test_ols_has_no_penalty(self):
        fitted = fit_method(MethodSpec(tag='ols', method='ols'), 'linear', self.small, seed=0)
        self.assertIsNone(predict_method(fitted, self.small.X, 0.95).log_lambda)

    def test_lasso_has_no_intervals(self):
        fitted = fit_method(MethodSpec(tag='lasso', method='lasso', folds=5), 'linear', self.small, seed=0)
        outcome = predict_method(fitted, self.small.X, 0.95)
        self.assertIsNone(outcome.intervals)
        self.assertEqual(outcome.eta_hat.shape, (self.small.n,))
