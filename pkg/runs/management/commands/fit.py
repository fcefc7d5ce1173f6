"""
Fit one or more methods to a dataset.

Usage:
    python manage.py fit --data helius.csv --schema helius.json --response sbp --method ridge_2 --groups 0,1,2 --seed 1 --out fits/
    python manage.py fit --data trial.csv --schema trial.json --response event --family logistic --method firth --seed 1 --out fits/
    python manage.py fit --data trial.csv --schema trial.json --response sbp --method bayes --prior glo --hc-scale 0.5 --parallelism 4 --seed 1 --out fits/
    python manage.py fit --config fit.json --seed 4 --out fits/

Writes fit.json per method; Bayesian fits also get draws.csv and summary.json.
With several methods each goes to its own sub-directory named by tag.
"""
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

import shrinkage_lab
from bayes_shrink.draws import PosteriorDraws, draws_to_frame, summarize_draws
from bayes_shrink.priors import LADDER
from bayes_shrink.serializers import PosteriorDrawsSerializer
from core.exceptions import ShrinkageError
from core.serializers import ColumnMetaSerializer, FitResultSerializer, finite_or_none, render_json
from logistic.fits import LogisticFit
from logistic.serializers import LogisticFitSerializer
from runs.harness import build_plan, error_lines, method_seed, read_config, validate_config
from runs.methods import fit_method


def parse_groups(text):
    """'0,1,2;3,4' -> [[0, 1, 2], [3, 4]]"""
    groups = []
    for block in text.split(';'):
        block = block.strip()
        if block:
            groups.append([int(k) for k in block.split(',')])
    return groups


def method_entries(text, prior=None):
    """'ridge,bayes' with prior 'glo' -> [{'tag': 'ridge'}, {'tag': 'bayes-glo'}]"""
    tags = [t.strip() for t in text.split(',') if t.strip()]
    if prior and 'bayes' not in tags:
        raise CommandError('--prior needs --method bayes')
    entries = []
    for tag in tags:
        if tag == 'bayes':
            if not prior:
                raise CommandError(f"--method bayes needs --prior ({'|'.join(LADDER)})")
            tag = f'bayes-{prior}'
        entries.append({'tag': tag})
    return entries


def serialize(fitted):
    if isinstance(fitted, PosteriorDraws):
        return PosteriorDrawsSerializer(fitted).data
    if isinstance(fitted, LogisticFit):
        return LogisticFitSerializer(fitted).data
    return FitResultSerializer(fitted).data


class Command(BaseCommand):
    help = 'Fit shrinkage methods to a dataset and write fit.json (plus draws for Bayesian fits)'

    def add_arguments(self, parser):
        parser.add_argument('--config', type=str, help='JSON config with a dataset block and methods')
        parser.add_argument('--data', type=str, help='CSV file')
        parser.add_argument('--schema', type=str, help='JSON column schema')
        parser.add_argument('--response', type=str, help='Response column')
        parser.add_argument(
            '--family',
            type=str,
            choices=['linear', 'logistic'],
            default=None,
            help='Model family (default linear)',
        )
        parser.add_argument(
            '--method',
            type=str,
            help="Comma-separated method tags; 'bayes' takes its prior from --prior",
        )
        parser.add_argument('--prior', type=str, choices=LADDER, help='Prior for --method bayes')
        parser.add_argument('--hc-scale', type=float, help='Half-Cauchy scale for Bayesian methods')
        parser.add_argument('--groups', type=str, help="Covariate groups, e.g. '0,1,2;3,4' (0-based)")
        parser.add_argument('--noise', type=int, default=None, help='Noise covariates to append')
        parser.add_argument('--level', type=float, default=None, help='Interval level')
        parser.add_argument('--seed', type=int, help='Seed (unsigned 64-bit)')
        parser.add_argument('--parallelism', type=int, help='Worker processes for MCMC chains')
        parser.add_argument('--out', type=str, required=True, help='Output directory')

    def handle(self, *args, **options):
        data = read_config(options['config']) if options['config'] else {}
        dataset = dict(data.get('dataset') or {})
        for key, opt in (('path', 'data'), ('schema', 'schema'), ('response', 'response'),
                         ('family', 'family'), ('noise_covariates', 'noise')):
            if options[opt] is not None:
                dataset[key] = options[opt]
        if dataset:
            data['dataset'] = dataset
        data.pop('scenario', None)
        if options['method']:
            data['methods'] = method_entries(options['method'], options['prior'])
        elif options['prior']:
            raise CommandError('--prior needs --method bayes')
        if options['hc_scale'] is not None:
            bayes = [m for m in data.get('methods') or () if m.get('method', m.get('tag', '')).startswith('bayes-')]
            if not bayes:
                raise CommandError('--hc-scale needs a Bayesian method')
            for m in bayes:
                m['scale'] = options['hc_scale']
        if options['groups']:
            try:
                data['groups'] = parse_groups(options['groups'])
            except ValueError:
                raise CommandError(f"Cannot parse --groups '{options['groups']}'")
        if options['seed'] is not None:
            data['seed'] = options['seed']
        if options['level'] is not None:
            data['level'] = options['level']
        if options['parallelism'] is not None:
            data['parallelism'] = options['parallelism']

        try:
            plan = build_plan(validate_config(data))
        except ValidationError as exc:
            for line in error_lines(exc):
                self.stderr.write(self.style.ERROR(line))
            raise CommandError('Invalid fit config')

        for note in plan.notes:
            self.stderr.write(self.style.NOTICE(note))

        d = plan.dataset
        columns = ColumnMetaSerializer(d.columns, many=True).data
        out = Path(options['out'])
        n_jobs = plan.config['parallelism'] if 'parallelism' in data else None
        failed = []
        for spec in plan.specs:
            target = out if len(plan.specs) == 1 else out / spec.tag
            target.mkdir(parents=True, exist_ok=True)
            seed = method_seed(plan.seed, 0, spec.tag)
            self.stderr.write(f'Fitting {spec.tag} on {d.name} (n={d.n}, p={d.p})')
            try:
                fitted = fit_method(spec, plan.family, d, seed, n_jobs=n_jobs)
            except ShrinkageError as exc:
                self.stderr.write(self.style.ERROR(f'{spec.tag}: {type(exc).__name__}: {exc}'))
                failed.append(spec.tag)
                continue

            payload = {
                'version': shrinkage_lab.__version__,
                'method': spec.to_dict(),
                'family': plan.family,
                'seed': seed,
                'dataset': {'name': d.name, 'n': d.n, 'p': d.p, 'columns': columns},
                'fit': serialize(fitted),
            }
            (target / 'fit.json').write_bytes(render_json(payload))
            if isinstance(fitted, PosteriorDraws):
                float_format = getattr(settings, 'CSV_FLOAT_FORMAT', '%.17g')
                draws_to_frame(fitted).to_csv(target / 'draws.csv', index=False,
                                              float_format=float_format, lineterminator='\n')
                summary = summarize_draws(fitted).to_dict(orient='index')
                (target / 'summary.json').write_bytes(render_json(finite_or_none(summary)))
            self.stderr.write(self.style.SUCCESS(f'Wrote {target / "fit.json"}'))

        if failed:
            raise CommandError(f"Fit failed for: {', '.join(failed)}")
