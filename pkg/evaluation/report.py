"""
Per-replicate records and their aggregation.

A record is one (replicate, method) job. The records table is the only
input to ``aggregate`` so aggregates can always be recomputed from
``records.csv``.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from django.conf import settings

from core.exceptions import DataValidationError


logger = logging.getLogger(__name__)

RECORD_COLUMNS = (
    'scenario', 'replicate', 'method', 'n_train', 'seed',
    'msep', 'cslope', 'cslope_winsorized', 'coverage', 'mean_width', 'calslope',
    'log_lambda', 'converged', 'diagnostics_warning', 'correction_fallback', 'error',
)
METRICS = ('msep', 'cslope', 'cslope_winsorized', 'coverage', 'mean_width', 'calslope')
QUANTILES = (0.1, 0.9)
LAMBDA_QUANTILES = (0.025, 0.5, 0.975)


def join_log_lambda(values) -> str:
    """Encode a per-group log-lambda vector into one CSV cell."""
    fmt = getattr(settings, 'CSV_FLOAT_FORMAT', '%.17g')
    return ';'.join(fmt % v for v in np.asarray(values, dtype=np.float64).ravel())


def split_log_lambda(cell) -> List[float]:
    if cell is None or (isinstance(cell, float) and np.isnan(cell)) or cell == '':
        return []
    return [float(v) for v in str(cell).split(';')]


def records_frame(rows: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    """Records in the fixed column order, sorted by replicate then method position."""
    frame = pd.DataFrame(list(rows), columns=list(RECORD_COLUMNS))
    for name in METRICS:
        frame[name] = pd.to_numeric(frame[name], errors='coerce')
    frame['error'] = frame['error'].fillna('')
    frame['log_lambda'] = frame['log_lambda'].fillna('')
    return frame


def write_records(frame: pd.DataFrame, path) -> None:
    frame.to_csv(path, index=False, columns=list(RECORD_COLUMNS),
                 float_format=getattr(settings, 'CSV_FLOAT_FORMAT', '%.17g'), lineterminator='\n')


def read_records(path) -> pd.DataFrame:
    frame = pd.read_csv(path, dtype={'method': str, 'scenario': str, 'log_lambda': str, 'error': str},
                        keep_default_na=True)
    missing = [c for c in RECORD_COLUMNS if c not in frame.columns]
    if missing:
        raise DataValidationError(f"Records file {path} lacks columns: {', '.join(missing)}")
    return records_frame(frame.to_dict(orient='records'))


def _describe(values: pd.Series) -> Dict[str, Optional[float]]:
    values = values.dropna()
    if values.empty:
        return {'mean': None, 'median': None, 'q10': None, 'q90': None, 'count': 0}
    q = values.quantile(list(QUANTILES), interpolation='linear')
    return {
        'mean': float(values.mean()),
        'median': float(values.median()),
        'q10': float(q.iloc[0]),
        'q90': float(q.iloc[1]),
        'count': int(values.shape[0]),
    }


def _penalty_variability(cells: pd.Series) -> List[Dict[str, float]]:
    vectors = [split_log_lambda(c) for c in cells]
    vectors = [v for v in vectors if v]
    if not vectors:
        return []
    width = max(len(v) for v in vectors)
    out = []
    for g in range(width):
        column = np.array([v[g] for v in vectors if len(v) > g])
        column = column[np.isfinite(column)]
        if column.size == 0:
            continue
        q = np.quantile(column, LAMBDA_QUANTILES, method='linear')
        out.append({'group': g + 1, 'q2.5': float(q[0]), 'q50': float(q[1]), 'q97.5': float(q[2])})
    return out


@dataclass
class EvalReport:
    """Aggregates per (scenario, method, training size)."""

    groups: List[Dict[str, Any]] = field(default_factory=list)

    def for_method(self, method: str, n_train: Optional[int] = None) -> Dict[str, Any]:
        for entry in self.groups:
            if entry['method'] == method and (n_train is None or entry['n_train'] == n_train):
                return entry
        raise KeyError(method)

    def to_dict(self):
        return {'groups': self.groups}


def aggregate(records: pd.DataFrame) -> EvalReport:
    """
    Mean, median and 10%/90% quantiles of every metric, root mean squared
    deviation of cslope from 1, and log-lambda quantiles per penalty group.

    Failed jobs (non-empty ``error``) count towards ``failures`` only.
    """
    if records is None or records.empty:
        raise DataValidationError("Cannot aggregate an empty records table")
    report = EvalReport()
    keys = ['scenario', 'method', 'n_train']
    order = records[keys].drop_duplicates()
    for _, key in order.iterrows():
        mask = np.ones(records.shape[0], dtype=bool)
        for k in keys:
            mask &= (records[k] == key[k]).to_numpy()
        rows = records[mask]
        ok = rows[rows['error'] == '']
        slopes = ok['cslope'].dropna()
        report.groups.append({
            'scenario': str(key['scenario']),
            'method': str(key['method']),
            'n_train': int(key['n_train']),
            'replicates': int(rows.shape[0]),
            'failures': int(rows.shape[0] - ok.shape[0]),
            'metrics': {name: _describe(ok[name]) for name in METRICS},
            'rmse_cslope_vs_1': float(np.sqrt(np.mean((slopes - 1.0) ** 2))) if not slopes.empty else None,
            'log_lambda': _penalty_variability(ok['log_lambda']),
        })
    logger.info(f"Aggregated {records.shape[0]} record(s) into {len(report.groups)} group(s)")
    return report
