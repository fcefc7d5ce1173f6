import os
import tempfile

import numpy as np

from core.exceptions import DataValidationError
from core.tests.base import ShrinkageTestCase
from evaluation.report import (
    RECORD_COLUMNS, aggregate, join_log_lambda, read_records, records_frame, split_log_lambda,
    write_records,
)


def record(replicate, method='ridge', **values):
    row = {'scenario': 'intro', 'replicate': replicate, 'method': method, 'n_train': 50,
           'seed': 100 + replicate, 'error': ''}
    row.update(values)
    return row


class AggregateTests(ShrinkageTestCase):

    def test_single_record_aggregates_equal_record(self):
        frame = records_frame([record(0, msep=0.2, cslope=0.9, coverage=0.8, mean_width=1.5)])
        entry = aggregate(frame).for_method('ridge')
        msep = entry['metrics']['msep']
        self.assertEqual((msep['mean'], msep['median'], msep['q10'], msep['q90']), (0.2, 0.2, 0.2, 0.2))
        self.assertAlmostEqual(entry['rmse_cslope_vs_1'], 0.1)

    def test_perfect_cslope_has_zero_rmse(self):
        frame = records_frame([record(i, cslope=1.0) for i in range(5)])
        self.assertEqual(aggregate(frame).for_method('ridge')['rmse_cslope_vs_1'], 0.0)

    def test_type7_quantiles(self):
        frame = records_frame([record(i, msep=float(i)) for i in range(11)])
        stats = aggregate(frame).for_method('ridge')['metrics']['msep']
        self.assertAlmostEqual(stats['q10'], 1.0)
        self.assertAlmostEqual(stats['q90'], 9.0)
        self.assertAlmostEqual(stats['median'], 5.0)

    def test_failures_are_counted_not_averaged(self):
        frame = records_frame([record(0, msep=1.0), record(1, msep=np.nan, error='EstimationError: boom')])
        entry = aggregate(frame).for_method('ridge')
        self.assertEqual(entry['failures'], 1)
        self.assertEqual(entry['metrics']['msep']['mean'], 1.0)

    def test_groups_by_method_and_training_size(self):
        rows = [record(0, method='ols', msep=1.0), record(0, method='ridge', msep=2.0)]
        rows.append(dict(record(1, method='ols', msep=3.0), n_train=200))
        report = aggregate(records_frame(rows))
        self.assertEqual(len(report.groups), 3)
        self.assertEqual(report.for_method('ols', 200)['metrics']['msep']['mean'], 3.0)

    def test_penalty_quantiles_per_group(self):
        rows = [record(i, log_lambda=join_log_lambda([float(i), -float(i)])) for i in range(41)]
        entry = aggregate(records_frame(rows)).for_method('ridge')
        self.assertEqual([g['group'] for g in entry['log_lambda']], [1, 2])
        self.assertAlmostEqual(entry['log_lambda'][0]['q50'], 20.0)
        self.assertAlmostEqual(entry['log_lambda'][1]['q2.5'], -39.0)

    def test_empty_records(self):
        with self.assertRaises(DataValidationError):
            aggregate(records_frame([]))


class RecordsFileTests(ShrinkageTestCase):

    def test_csv_round_trip_preserves_aggregates(self):
        rng = np.random.default_rng(0)
        rows = [record(i, msep=rng.uniform(), cslope=rng.normal(1, 0.1), coverage=rng.uniform(),
                       log_lambda=join_log_lambda([rng.normal()])) for i in range(20)]
        frame = records_frame(rows)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'records.csv')
            write_records(frame, path)
            with open(path) as fh:
                self.assertEqual(fh.readline().strip().split(','), list(RECORD_COLUMNS))
            again = read_records(path)
        self.assertEqual(aggregate(frame).to_dict(), aggregate(again).to_dict())

    def test_log_lambda_cell(self):
        self.assertEqual(split_log_lambda(join_log_lambda([0.5, -2.0])), [0.5, -2.0])
        self.assertEqual(split_log_lambda(''), [])
