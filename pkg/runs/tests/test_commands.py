import json
import os
import tempfile
from io import StringIO
from unittest import mock

import numpy as np
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError

from core.tests.base import ShrinkageTestCase
from runs.management.commands import fit as fit_command


SCHEMA = {
    'age': {'kind': 'continuous'},
    'sex': {'kind': 'binary'},
    'smoker': {'kind': 'binary'},
    'ethnicity': {'kind': 'nominal', 'baseline': 'Dutch'},
}


class CommandTestCase(ShrinkageTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, *parts):
        return os.path.join(self.tmp.name, *parts)

    def write_json(self, name, data):
        with open(self.path(name), 'w') as fh:
            json.dump(data, fh)
        return self.path(name)

    def write_cohort(self):
        frame = self.raw.copy()
        frame['event'] = (np.arange(len(frame)) % 3 == 0).astype(int)
        frame.to_csv(self.path('cohort.csv'), index=False)
        self.write_json('cohort.json', SCHEMA)

    def call(self, name, *args, **options):
        out, err = StringIO(), StringIO()
        call_command(name, *args, stdout=out, stderr=err, **options)
        return out.getvalue(), err.getvalue()

    def read_bytes(self, *parts):
        with open(self.path(*parts), 'rb') as fh:
            return fh.read()


class ValidateCommandTests(CommandTestCase):

    def test_valid_config_prints_ok(self):
        config = self.write_json('run.json', {'scenario': 'intro', 'methods': [{'tag': 'ols'}], 'seed': 1})
        out, _ = self.call('validate', config)
        self.assertEqual(out.strip(), 'ok')

    def test_config_flag_form(self):
        config = self.write_json('run.json', {'scenario': 'intro', 'methods': [{'tag': 'ols'}], 'seed': 1})
        out, _ = self.call('validate', config=config)
        self.assertEqual(out.strip(), 'ok')

    def test_config_is_required(self):
        with self.assertRaisesMessage(CommandError, '--config'):
            self.call('validate')

    def test_notes_go_to_stderr(self):
        config = self.write_json('run.json', {'scenario': 'intro', 'methods': [{'tag': 'bayes-eb'}], 'seed': 1})
        out, err = self.call('validate', config)
        self.assertEqual(out.strip(), 'ok')
        self.assertIn('methods.0', err)

    def test_group_index_error_names_the_path(self):
        config = self.write_json('run.json', {
            'scenario': 'intro', 'seed': 1,
            'methods': [{'tag': 'ols'}, {'tag': 'ridge_2', 'groups': [[0, 1], [2, 12]]}],
        })
        err = StringIO()
        with self.assertRaises(CommandError):
            call_command('validate', config, stdout=StringIO(), stderr=err)
        self.assertIn('methods.1.groups.1', err.getvalue())

    def test_missing_seed(self):
        config = self.write_json('run.json', {'scenario': 'intro', 'methods': [{'tag': 'ols'}]})
        err = StringIO()
        with self.assertRaises(CommandError):
            call_command('validate', config, stdout=StringIO(), stderr=err)
        self.assertIn('seed: A seed is required.', err.getvalue())

    def test_dataset_paths_resolve_against_the_config(self):
        self.write_cohort()
        config = self.write_json('run.json', {
            'scenario': 'subsets', 'seed': 1, 'methods': [{'tag': 'ols'}],
            'dataset': {'path': 'cohort.csv', 'schema': 'cohort.json', 'response': 'outcome'},
            'scenario_params': {'subset_sizes': [20]},
        })
        out, _ = self.call('validate', config)
        self.assertEqual(out.strip(), 'ok')


class SimulateCommandTests(CommandTestCase):

    def test_inline_run_writes_outputs(self):
        self.call('simulate', scenario='intro', methods='ols,ridge', replicates=2, seed=4, out=self.path('a'))
        records = pd.read_csv(self.path('a', 'records.csv'))
        self.assertEqual(len(records), 4)
        self.assertEqual(sorted(records['method'].unique()), ['ols', 'ridge'])
        manifest = json.loads(self.read_bytes('a', 'manifest.json'))
        self.assertEqual(manifest['seed'], 4)
        self.assertEqual(manifest['jobs'], 4)
        self.assertNotIn('parallelism', manifest['config'])

    def test_param_overrides_scenario(self):
        self.call('simulate', scenario='intro', methods='ols', seed=4, out=self.path('a'), param=['n_train=30'])
        records = pd.read_csv(self.path('a', 'records.csv'))
        self.assertEqual(records['n_train'].tolist(), [30])

    def test_failures_exit_nonzero_after_writing(self):
        with self.assertRaises(CommandError):
            self.call('simulate', scenario='intro', methods='ols', seed=4, out=self.path('a'), param=['n_train=8'])
        self.assertTrue(os.path.exists(self.path('a', 'records.csv')))

    def test_invalid_config_is_reported(self):
        err = StringIO()
        with self.assertRaises(CommandError):
            call_command('simulate', scenario='intro', methods='firth', seed=1, out=self.path('a'),
                         stdout=StringIO(), stderr=err)
        self.assertIn('methods.0.method', err.getvalue())
        self.assertFalse(os.path.exists(self.path('a')))


class EvaluateCommandTests(CommandTestCase):

    def test_recomputes_identical_aggregates(self):
        self.call('simulate', scenario='intro', methods='ols,ridge', replicates=3, seed=9, out=self.path('a'))
        self.call('evaluate', self.path('a', 'records.csv'), out=self.path('b'))
        self.assertEqual(self.read_bytes('a', 'aggregates.json'), self.read_bytes('b', 'aggregates.json'))

    def test_records_flag_form(self):
        self.call('simulate', scenario='intro', methods='ols', replicates=2, seed=9, out=self.path('a'))
        self.call('evaluate', records=self.path('a', 'records.csv'), out=self.path('b'))
        self.assertEqual(self.read_bytes('a', 'aggregates.json'), self.read_bytes('b', 'aggregates.json'))

    def test_records_are_required(self):
        with self.assertRaisesMessage(CommandError, '--records'):
            self.call('evaluate')

    def test_missing_records(self):
        with self.assertRaises(CommandError):
            self.call('evaluate', self.path('nope.csv'))


class FitCommandTests(CommandTestCase):

    def setUp(self):
        super().setUp()
        self.write_cohort()

    def fit(self, **options):
        return self.call('fit', data=self.path('cohort.csv'), schema=self.path('cohort.json'),
                         seed=2, out=self.path('fits'), **options)

    def test_single_method_writes_fit_json(self):
        self.fit(response='outcome', method='ridge')
        payload = json.loads(self.read_bytes('fits', 'fit.json'))
        self.assertEqual(payload['family'], 'linear')
        self.assertEqual(payload['dataset']['n'], 40)
        self.assertEqual(payload['dataset']['p'], 7)
        self.assertEqual(len(payload['fit']['beta']), 7)
        self.assertEqual(payload['method']['tag'], 'ridge')

    def test_several_methods_get_subdirectories(self):
        self.fit(response='outcome', method='ols,ridge_2', groups='0,1,2')
        for tag in ('ols', 'ridge_2'):
            self.assertTrue(os.path.exists(self.path('fits', tag, 'fit.json')))

    def test_logistic_fit(self):
        self.fit(response='event', family='logistic', method='firth')
        payload = json.loads(self.read_bytes('fits', 'fit.json'))
        self.assertEqual(payload['family'], 'logistic')
        self.assertTrue(payload['fit']['converged'])

    def test_bayes_fit_writes_draws(self):
        config = self.write_json('fit.json', {
            'dataset': {'path': 'cohort.csv', 'schema': 'cohort.json', 'response': 'outcome'},
            'methods': [{'tag': 'bayes-glo', 'mcmc': {'chains': 2, 'iterations': 200, 'burn_in': 100}}],
        })
        self.call('fit', config=config, seed=5, out=self.path('fits'))
        draws = pd.read_csv(self.path('fits', 'draws.csv'))
        self.assertEqual(len(draws), 200)
        summary = json.loads(self.read_bytes('fits', 'summary.json'))
        self.assertTrue(summary)

    def test_bad_groups(self):
        with self.assertRaises(CommandError):
            self.fit(response='outcome', method='ridge_2', groups='a,b')


class FitBayesFlagTests(CommandTestCase):

    def setUp(self):
        super().setUp()
        self.write_cohort()

    def fit(self, out='fits', **options):
        return self.call('fit', data=self.path('cohort.csv'), schema=self.path('cohort.json'),
                         seed=2, out=self.path(out), **options)

    def payload(self, *parts):
        return json.loads(self.read_bytes(*parts, 'fit.json'))

    def test_prior_selects_the_bayes_method(self):
        with self.settings(MCMC_CHAINS=2, MCMC_ITERATIONS=200, MCMC_BURN_IN=100):
            self.fit(response='outcome', method='bayes', prior='glo')
        payload = self.payload('fits')
        self.assertEqual(payload['method']['tag'], 'bayes-glo')
        self.assertEqual(payload['method']['method'], 'bayes-glo')
        self.assertTrue(os.path.exists(self.path('fits', 'draws.csv')))

    def test_bayes_without_prior(self):
        with self.assertRaisesMessage(CommandError, '--method bayes needs --prior'):
            self.fit(response='outcome', method='bayes')

    def test_prior_without_bayes(self):
        with self.assertRaises(CommandError):
            self.fit(response='outcome', method='ridge', prior='glo')

    def test_unknown_prior_is_rejected(self):
        with self.assertRaises(CommandError):
            self.fit(response='outcome', method='bayes', prior='horseshoe')

    def test_hc_scale_reaches_the_prior(self):
        with self.settings(MCMC_CHAINS=2, MCMC_ITERATIONS=200, MCMC_BURN_IN=100):
            self.fit(response='outcome', method='ridge,bayes', prior='loc', hc_scale=0.5)
        payload = self.payload('fits', 'bayes-loc')
        self.assertEqual(payload['method']['scale'], 0.5)
        self.assertIsNone(self.payload('fits', 'ridge')['method']['scale'])

    def test_hc_scale_for_logistic_bayes(self):
        with self.settings(MCMC_CHAINS=2, MCMC_ITERATIONS=200, MCMC_BURN_IN=100):
            self.fit(response='event', family='logistic', method='bayes', prior='glo', hc_scale=0.25)
        self.assertEqual(self.payload('fits')['method']['scale'], 0.25)

    def test_hc_scale_needs_a_bayes_method(self):
        with self.assertRaises(CommandError):
            self.fit(response='outcome', method='ridge', hc_scale=0.5)

    def test_parallelism_sizes_the_chain_pool(self):
        with self.settings(MCMC_CHAINS=2, MCMC_ITERATIONS=200, MCMC_BURN_IN=100), \
                mock.patch.object(fit_command, 'fit_method', wraps=fit_command.fit_method) as fitted:
            self.fit(response='outcome', method='bayes', prior='glo', parallelism=2)
        self.assertEqual(fitted.call_args.kwargs['n_jobs'], 2)

    def test_parallelism_does_not_change_draws(self):
        with self.settings(MCMC_CHAINS=2, MCMC_ITERATIONS=200, MCMC_BURN_IN=100):
            self.fit(out='serial', response='outcome', method='bayes', prior='glo', parallelism=1)
            self.fit(out='pool', response='outcome', method='bayes', prior='glo', parallelism=2)
        self.assertEqual(self.read_bytes('serial', 'draws.csv'), self.read_bytes('pool', 'draws.csv'))
