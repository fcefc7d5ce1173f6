"""
Batch harness: (replicate x method) jobs over a scenario source.

Jobs are pure given (run seed, replicate, method tag), so results do not
depend on the worker count or on the order in which jobs finish.
"""
import json
import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd
from joblib import Parallel, delayed
from rest_framework.exceptions import ValidationError

import shrinkage_lab
from core.coding import add_noise_covariates, code_dataset, load_csv
from core.data import Dataset
from core.exceptions import DataValidationError, ShrinkageError
from core.rng import STREAM_DATA, STREAM_METHOD, child_seed
from core.serializers import render_json
from core.validators import flatten_errors
from evaluation.metrics import (
    calibration_slope, coverage, cslope, msep, msep_observed, winsorize_cslope,
)
from evaluation.report import aggregate, join_log_lambda, records_frame, write_records
from simgen.registry import LOGISTIC, ScenarioSource, build_source
from simgen.scenarios import Replicate

from .methods import MethodOutcome, MethodSpec, fit_method, predict_method
from .serializers import RunConfigSerializer, method_specs


logger = logging.getLogger(__name__)

RECORDS_FILE = 'records.csv'
AGGREGATES_FILE = 'aggregates.json'
MANIFEST_FILE = 'manifest.json'


def read_config(path) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError({'config': f"Not valid JSON: {exc}"})
    if not isinstance(data, dict):
        raise ValidationError({'config': "Top level must be a JSON object."})
    dataset = data.get('dataset')
    if isinstance(dataset, dict):
        for key in ('path', 'schema'):
            if isinstance(dataset.get(key), str) and not Path(dataset[key]).is_absolute():
                dataset[key] = str(path.parent / dataset[key])
    return data


def validate_config(data: Dict[str, Any]) -> Dict[str, Any]:
    """Validated config; raises DRF ValidationError with the full detail."""
    serializer = RunConfigSerializer(data=data)
    serializer.is_valid(raise_exception=True)
    return serializer.validated_data


def load_dataset(cfg: Dict[str, Any], seed: int) -> Dataset:
    raw, policy = load_csv(cfg['path'], cfg['schema'], cfg['response'])
    d = code_dataset(raw, policy)
    return add_noise_covariates(d, cfg.get('noise_covariates', 0), seed)


def group_errors(specs: Sequence[MethodSpec], p: int) -> List[Tuple[str, str]]:
    """(field path, message) for every group index outside the design."""
    errors = []
    for i, spec in enumerate(specs):
        for j, group in enumerate(spec.groups):
            for k in group:
                if k >= p:
                    errors.append((f'methods.{i}.groups.{j}', f"Covariate index {k} is out of range for p={p}"))
    return errors


def method_seed(seed: int, replicate: int, tag: str) -> int:
    return child_seed(seed, STREAM_METHOD, replicate, zlib.crc32(tag.encode('utf-8')))


@dataclass
class RunPlan:
    config: Dict[str, Any]
    specs: List[MethodSpec]
    family: str
    source: Optional[ScenarioSource] = None
    dataset: Optional[Dataset] = None
    notes: List[str] = field(default_factory=list)

    @property
    def seed(self) -> int:
        return self.config['seed']

    @property
    def p(self) -> int:
        if self.dataset is not None:
            return self.dataset.p
        return self.source.get(0).train.p


def build_plan(validated: Dict[str, Any]) -> RunPlan:
    """
    Resolve data and scenario. Group indices are checked against the design.

    Raises:
        ValidationError: with dotted field paths for out-of-range groups
    """
    specs = method_specs(validated)
    seed = validated['seed']
    dataset = load_dataset(validated['dataset'], seed) if validated.get('dataset') else None
    source = None
    if validated.get('scenario'):
        mcmc = next((s.mcmc for s in specs if s.mcmc is not None), None)
        source = build_source(validated['scenario'], validated.get('scenario_params'),
                              validated['replicates'], seed, dataset=dataset,
                              groups=validated.get('groups') or (), mcmc=mcmc)
    plan = RunPlan(validated, specs, validated['family'], source, dataset, list(validated.get('notes', ())))
    errors = group_errors(specs, plan.p)
    if errors:
        raise ValidationError({path: msg for path, msg in errors})
    return plan


def score(outcome: MethodOutcome, rep: Replicate, family: str, msep_target: str, calslope: bool) -> Dict[str, Any]:
    row = {}
    if family == LOGISTIC:
        truth = rep.p_true if msep_target == 'true' else rep.test.y
        row['msep'] = msep(truth, outcome.prob_hat)
        row['cslope'] = cslope(rep.eta_true, outcome.eta_hat)
        row['cslope_winsorized'] = winsorize_cslope(row['cslope'])
    else:
        row['msep'] = (msep(rep.eta_true, outcome.eta_hat) if msep_target == 'true'
                       else msep_observed(rep.test.y, outcome.eta_hat))
        row['cslope'] = cslope(rep.eta_true, outcome.eta_hat)
    if outcome.intervals is not None:
        row['coverage'], row['mean_width'] = coverage(outcome.intervals, rep.eta_true)
    if calslope:
        row['calslope'] = calibration_slope(rep.test.y, outcome.eta_hat,
                                            'binomial' if family == LOGISTIC else 'gaussian')
    if outcome.log_lambda is not None:
        row['log_lambda'] = join_log_lambda(outcome.log_lambda)
    row.update(outcome.flags)
    return row


def run_job(source: ScenarioSource, spec: MethodSpec, replicate: int, seed: int, level: float,
            msep_target: str, calslope: bool) -> Dict[str, Any]:
    job_seed = method_seed(seed, replicate, spec.tag)
    row = {'scenario': source.name, 'replicate': replicate, 'method': spec.tag,
           'n_train': source.n_train(replicate), 'seed': job_seed, 'error': ''}
    try:
        rep = source.get(replicate)
        fitted = fit_method(spec, source.family, rep.train, job_seed)
        outcome = predict_method(fitted, rep.test.X, level, spec.corrected)
        row.update(score(outcome, rep, source.family, msep_target, calslope))
    except ShrinkageError as exc:
        logger.error(f"{spec.tag} on replicate {replicate} failed: {exc}")
        row['error'] = f'{type(exc).__name__}: {exc}'
    except Exception as exc:
        # unexpected errors are recorded with their traceback in the log
        logger.exception(f"{spec.tag} on replicate {replicate} raised {type(exc).__name__}")
        row['error'] = f'{type(exc).__name__}: {exc}'
    return row


@dataclass
class RunOutcome:
    records: pd.DataFrame
    aggregates: Dict[str, Any]
    manifest: Dict[str, Any]

    @property
    def failures(self) -> int:
        return int((self.records['error'] != '').sum())


def execute(plan: RunPlan, out_dir, parallelism: Optional[int] = None,
            progress: Optional[Callable[[int, int], None]] = None) -> RunOutcome:
    """
    Run every (replicate, method) job and write records, aggregates and manifest.

    Files are written even when jobs fail; callers decide the exit status
    from ``RunOutcome.failures``.
    """
    if plan.source is None:
        raise DataValidationError("A simulation run needs a scenario")
    cfg = plan.config
    workers = parallelism or cfg.get('parallelism', 1)
    source = plan.source
    jobs = [(r, spec) for r in range(source.n_jobs) for spec in plan.specs]
    logger.info(f"Running {len(jobs)} job(s) of scenario '{source.name}' on {workers} worker(s)")

    rows = []
    chunk = max(4 * workers, 1)
    with Parallel(n_jobs=workers) as parallel:
        for start in range(0, len(jobs), chunk):
            batch = jobs[start:start + chunk]
            rows.extend(parallel(
                delayed(run_job)(source, spec, r, plan.seed, cfg['level'], cfg['msep_target'], cfg['calslope'])
                for r, spec in batch
            ))
            if progress is not None:
                progress(len(rows), len(jobs))

    records = records_frame(rows)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_records(records, out / RECORDS_FILE)
    aggregates = aggregate(records).to_dict()
    (out / AGGREGATES_FILE).write_bytes(render_json(aggregates))

    failures = int((records['error'] != '').sum())
    manifest = {
        'toolkit': 'shrinkage_lab',
        'version': shrinkage_lab.__version__,
        'config': config_echo(cfg),
        'source': source.describe(),
        'seed': plan.seed,
        'replicate_seeds': [child_seed(plan.seed, STREAM_DATA, r) for r in range(source.n_jobs)],
        'method_seeds': {spec.tag: [method_seed(plan.seed, r, spec.tag) for r in range(source.n_jobs)]
                         for spec in plan.specs},
        'jobs': len(jobs),
        'failures': failures,
        'files': [RECORDS_FILE, AGGREGATES_FILE],
    }
    (out / MANIFEST_FILE).write_bytes(render_json(manifest))
    if failures:
        logger.warning(f"{failures} of {len(jobs)} job(s) failed; see the error column of {RECORDS_FILE}")
    return RunOutcome(records, aggregates, manifest)


def config_echo(cfg: Dict[str, Any]) -> Dict[str, Any]:
    """Validated config without worker count, so manifests match across parallelism settings."""
    echo = json.loads(json.dumps(cfg, default=str))
    echo.pop('parallelism', None)
    echo.pop('notes', None)
    return echo


def error_lines(exc: ValidationError) -> List[str]:
    return [f'{path}: {msg}' for path, msg in flatten_errors(exc.detail)]
