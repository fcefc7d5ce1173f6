import json
import os
import tempfile

import numpy as np

from core.coding import CodingPolicy, ColumnSpec, DatasetCoder, add_noise_covariates, code_dataset, load_csv
from core.data import ColumnKind
from core.exceptions import DataValidationError
from core.tests.base import ShrinkageTestCase


POLICY = CodingPolicy(
    response='outcome',
    columns={
        'age': ColumnSpec('continuous'),
        'sex': ColumnSpec('binary'),
        'smoker': ColumnSpec('binary'),
        'ethnicity': ColumnSpec('nominal', baseline='Dutch'),
    },
)


class CodeDatasetTests(ShrinkageTestCase):

    def test_continuous_columns_are_standardized(self):
        d = code_dataset(self.raw, POLICY)
        age = d.X[:, 0]
        self.assertAlmostEqual(float(age.mean()), 0.0, delta=1e-10)
        self.assertAlmostEqual(float(age.std(ddof=1)), 1.0, delta=1e-10)

    def test_binary_zero_one_maps_to_plus_minus_one(self):
        d = code_dataset(self.raw, POLICY)
        smoker = d.X[:, 2]
        self.assertEqual(set(np.unique(smoker)), {-1.0, 1.0})
        self.assertArrayClose(smoker, np.where(self.raw['smoker'] == 1, 1.0, -1.0))

    def test_nominal_expands_against_baseline(self):
        d = code_dataset(self.raw, POLICY)
        self.assertEqual(d.p, 1 + 1 + 1 + 4)
        dummies = [c for c in d.columns if c.kind == ColumnKind.DUMMY]
        self.assertEqual(len(dummies), 4)
        self.assertNotIn('Dutch', [c.level for c in dummies])
        dutch = (self.raw['ethnicity'] == 'Dutch').to_numpy()
        self.assertTrue(np.all(d.X[dutch, 3:] == -1.0))

    def test_standardized_column_unchanged(self):
        frame = self.raw.copy()
        age = frame['age'].to_numpy()
        frame['age'] = (age - age.mean()) / age.std(ddof=1)
        d = code_dataset(frame, POLICY)
        self.assertArrayClose(d.X[:, 0], frame['age'], atol=1e-12)

    def test_constant_column_names_the_column(self):
        frame = self.raw.copy()
        frame['age'] = 3.0
        with self.assertRaisesMessage(DataValidationError, "'age'"):
            code_dataset(frame, POLICY)

    def test_unseen_level_at_transform(self):
        coder = DatasetCoder(POLICY).fit(self.raw)
        other = self.raw.copy()
        other.loc[0, 'ethnicity'] = 'Other'
        with self.assertRaises(DataValidationError):
            coder.transform(other)

    def test_transform_on_training_table_reproduces_coding(self):
        coder = DatasetCoder(POLICY).fit(self.raw)
        self.assertArrayClose(coder.transform(self.raw).X, code_dataset(self.raw, POLICY).X, atol=0)

    def test_rescaling_raw_column_does_not_change_coded_design(self):
        frame = self.raw.copy()
        frame['age'] = frame['age'] * 10
        self.assertArrayClose(code_dataset(frame, POLICY).X, code_dataset(self.raw, POLICY).X, atol=1e-10)


class NoiseCovariateTests(ShrinkageTestCase):

    def test_adds_columns(self):
        d = add_noise_covariates(self.small, 5, seed=3)
        self.assertEqual(d.p, self.small.p + 5)
        self.assertTrue(all(c.kind == ColumnKind.NOISE for c in d.columns[-5:]))

    def test_zero_count_is_identity(self):
        self.assertIs(add_noise_covariates(self.small, 0, seed=3), self.small)

    def test_deterministic(self):
        a = add_noise_covariates(self.small, 2, seed=99)
        b = add_noise_covariates(self.small, 2, seed=99)
        self.assertArrayClose(a.X, b.X, atol=0)


class LoadCsvTests(ShrinkageTestCase):

    def test_drops_incomplete_rows(self):
        frame = self.raw.copy()
        frame.loc[3, 'age'] = np.nan
        schema = {
            'age': {'kind': 'continuous'},
            'sex': {'kind': 'binary'},
            'smoker': {'kind': 'binary'},
            'ethnicity': {'kind': 'nominal', 'baseline': 'Dutch'},
        }
        with tempfile.TemporaryDirectory() as tmp:
            csv_path = os.path.join(tmp, 'cohort.csv')
            schema_path = os.path.join(tmp, 'cohort.json')
            frame.to_csv(csv_path, index=False)
            with open(schema_path, 'w') as fh:
                json.dump(schema, fh)
            raw, policy = load_csv(csv_path, schema_path, response='outcome')

        self.assertEqual(len(raw), len(frame) - 1)
        self.assertEqual(policy.name, 'cohort')
        self.assertEqual(list(policy.columns), ['age', 'sex', 'smoker', 'ethnicity'])
