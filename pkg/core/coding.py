"""
Covariate coding and CSV ingestion.

Continuous columns are standardized, binary columns mapped to -1/+1 and
nominal columns expanded to -1/+1 dummies against a declared baseline level.
Coding parameters are learned once (on training data) and re-applied to any
other table, so test data is always coded with training parameters.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .data import Coding, ColumnKind, ColumnMeta, Dataset
from .exceptions import DataValidationError
from .rng import STREAM_NOISE, child_rng


logger = logging.getLogger(__name__)

DECLARED_KINDS = ('continuous', 'binary', 'nominal')


@dataclass(frozen=True)
class ColumnSpec:
    """Declared kind of one raw column (sidecar schema entry)."""

    kind: str
    baseline: Optional[str] = None
    positive: Optional[str] = None

    def __post_init__(self):
        if self.kind not in DECLARED_KINDS:
            raise DataValidationError(f"Unknown column kind '{self.kind}'; expected one of {DECLARED_KINDS}")


@dataclass(frozen=True)
class CodingPolicy:
    """Response column plus ordered covariate specs."""

    response: str
    columns: Dict[str, ColumnSpec]
    name: str = 'dataset'

    @classmethod
    def from_schema(cls, schema: Dict[str, Dict[str, Any]], response: str, name: str = 'dataset') -> 'CodingPolicy':
        columns = {}
        for column, entry in schema.items():
            if column == response:
                continue
            columns[column] = ColumnSpec(
                kind=entry['kind'],
                baseline=None if entry.get('baseline') is None else str(entry['baseline']),
                positive=None if entry.get('positive') is None else str(entry['positive']),
            )
        if not columns:
            raise DataValidationError("Schema declares no covariates")
        return cls(response=response, columns=columns, name=name)


def _sorted_levels(values) -> List[Any]:
    levels = list(pd.unique(values))
    try:
        return sorted(levels)
    except TypeError:
        return sorted(levels, key=str)


@dataclass
class DatasetCoder:
    """
    Learns coding parameters from a raw table and applies them.

    Usage:
        coder = DatasetCoder(policy).fit(train_frame)
        train = coder.transform(train_frame)
        test = coder.transform(test_frame)
    """

    policy: CodingPolicy
    params: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    @property
    def fitted(self) -> bool:
        return bool(self.params)

    def fit(self, frame: pd.DataFrame) -> 'DatasetCoder':
        self._check_frame(frame)
        params = {}
        for column, spec in self.policy.columns.items():
            values = frame[column]
            if spec.kind == 'continuous':
                x = values.to_numpy(dtype=np.float64)
                sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
                if not np.isfinite(sd) or sd <= 0.0:
                    raise DataValidationError(f"Column '{column}' is constant (zero standard deviation)")
                params[column] = {'mean': float(np.mean(x)), 'sd': sd}
            elif spec.kind == 'binary':
                levels = _sorted_levels(values)
                if len(levels) != 2:
                    raise DataValidationError(
                        f"Binary column '{column}' must have exactly two observed levels; got {len(levels)}"
                    )
                if spec.positive is not None:
                    by_str = {str(v): v for v in levels}
                    if spec.positive not in by_str:
                        raise DataValidationError(f"Column '{column}' has no level '{spec.positive}'")
                    positive = by_str[spec.positive]
                    negative = next(v for v in levels if v != positive)
                    levels = [negative, positive]
                params[column] = {'levels': levels}
            else:
                levels = [str(v) for v in _sorted_levels(values.astype(str))]
                baseline = spec.baseline if spec.baseline is not None else levels[0]
                if baseline not in levels:
                    raise DataValidationError(f"Baseline '{baseline}' not observed in column '{column}'")
                params[column] = {
                    'baseline': baseline,
                    'levels': [lv for lv in levels if lv != baseline],
                }
        self.params = params
        return self

    def transform(self, frame: pd.DataFrame, name: Optional[str] = None) -> Dataset:
        if not self.fitted:
            raise DataValidationError("DatasetCoder.transform called before fit")
        self._check_frame(frame)

        blocks = []
        metas = []
        for column, spec in self.policy.columns.items():
            values = frame[column]
            par = self.params[column]
            if spec.kind == 'continuous':
                x = (values.to_numpy(dtype=np.float64) - par['mean']) / par['sd']
                blocks.append(x[:, None])
                metas.append(ColumnMeta(ColumnKind.CONTINUOUS, Coding.STANDARDIZED, column))
            elif spec.kind == 'binary':
                negative, positive = par['levels']
                unseen = ~(values.isin([negative, positive]))
                if unseen.any():
                    raise DataValidationError(
                        f"Column '{column}' has unseen level(s) {sorted(map(str, values[unseen].unique()))}"
                    )
                x = np.where(values == positive, 1.0, -1.0)
                blocks.append(x[:, None])
                metas.append(ColumnMeta(ColumnKind.BINARY, Coding.PLUS_MINUS_ONE, column))
            else:
                as_text = values.astype(str)
                known = set(par['levels']) | {par['baseline']}
                unseen = ~as_text.isin(known)
                if unseen.any():
                    raise DataValidationError(
                        f"Column '{column}' has unseen level(s) {sorted(as_text[unseen].unique())}"
                    )
                for level in par['levels']:
                    x = np.where(as_text == level, 1.0, -1.0)
                    blocks.append(x[:, None])
                    metas.append(ColumnMeta(
                        ColumnKind.DUMMY, Coding.PLUS_MINUS_ONE, column,
                        name=f'{column}[{level}]', level=level,
                    ))

        X = np.hstack(blocks)
        y = frame[self.policy.response].to_numpy(dtype=np.float64)
        return Dataset(y=y, X=X, columns=tuple(metas), name=name or self.policy.name, coder=self)

    def _check_frame(self, frame: pd.DataFrame):
        needed = [self.policy.response, *self.policy.columns]
        missing = [c for c in needed if c not in frame.columns]
        if missing:
            raise DataValidationError(f"Missing column(s): {missing}")
        if frame[needed].isna().any().any():
            raise DataValidationError("Table has missing values; only complete cases are supported")


def code_dataset(raw: pd.DataFrame, policy: CodingPolicy, name: Optional[str] = None) -> Dataset:
    """Fit coding parameters on ``raw`` and return the coded dataset."""
    coder = DatasetCoder(policy).fit(raw)
    dataset = coder.transform(raw, name=name)
    logger.info(f"Coded '{dataset.name}': n={dataset.n}, p={dataset.p}")
    return dataset


def add_noise_covariates(d: Dataset, count: int, seed: int) -> Dataset:
    """
    Append ``count`` i.i.d. standard normal columns (kind=noise, uncoded).

    Args:
        d: Coded dataset
        count: Number of noise columns (>= 0)
        seed: Run seed; draws come from the noise stream of this seed

    Returns:
        Dataset with p + count columns
    """
    if count < 0:
        raise DataValidationError(f"Noise covariate count must be >= 0; got {count}")
    if count == 0:
        return d
    block = child_rng(seed, STREAM_NOISE).standard_normal((d.n, count))
    start = sum(1 for c in d.columns if c.kind == ColumnKind.NOISE)
    metas = [
        ColumnMeta(ColumnKind.NOISE, Coding.RAW, f'noise{start + j + 1}')
        for j in range(count)
    ]
    return d.append_columns(block, metas)


def load_csv(path, schema_path, response: str) -> Tuple[pd.DataFrame, CodingPolicy]:
    """
    Read a CSV table and its sidecar JSON schema.

    Rows with a missing value in any used column are dropped (complete-case).

    Returns:
        (raw table restricted to used columns, coding policy)
    """
    path = Path(path)
    with open(schema_path, encoding='utf-8') as fh:
        schema = json.load(fh)
    policy = CodingPolicy.from_schema(schema, response=response, name=path.stem)

    frame = pd.read_csv(path)
    used = [response, *policy.columns]
    missing = [c for c in used if c not in frame.columns]
    if missing:
        raise DataValidationError(f"{path.name}: column(s) {missing} not in header")

    frame = frame[used]
    complete = frame.dropna()
    dropped = len(frame) - len(complete)
    if dropped:
        logger.info(f"{path.name}: dropped {dropped} incomplete row(s) of {len(frame)}")
    return complete.reset_index(drop=True), policy
