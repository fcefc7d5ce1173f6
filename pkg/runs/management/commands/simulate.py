"""
Run a simulation study: every method on every replicate of a scenario.

Usage:
    python manage.py simulate --config study.json --out results/
    python manage.py simulate --scenario intro --methods ridge,ridge_2,bayes-2 --replicates 200 --seed 1 --out results/
    python manage.py simulate --scenario logistic-n100 --param signal=strong --methods ml,firth --seed 3 --out results/
"""
import json

from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from runs.harness import build_plan, error_lines, execute, read_config, validate_config


class Command(BaseCommand):
    help = 'Run a simulation study and write records.csv, aggregates.json and manifest.json'

    def add_arguments(self, parser):
        parser.add_argument('--config', type=str, help='JSON run config')
        parser.add_argument('--scenario', type=str, help='Scenario name (overrides the config)')
        parser.add_argument(
            '--methods',
            type=str,
            help='Comma-separated method tags (overrides the config)',
        )
        parser.add_argument('--replicates', type=int, help='Replicates per method')
        parser.add_argument('--seed', type=int, help='Run seed (unsigned 64-bit)')
        parser.add_argument('--parallelism', type=int, help='Worker processes')
        parser.add_argument(
            '--param',
            action='append',
            default=[],
            help='Scenario parameter KEY=VALUE, VALUE parsed as JSON (repeatable)',
        )
        parser.add_argument('--out', type=str, required=True, help='Output directory')

    def handle(self, *args, **options):
        data = read_config(options['config']) if options['config'] else {}
        if options['scenario']:
            data['scenario'] = options['scenario']
        if options['methods']:
            data['methods'] = [{'tag': t.strip()} for t in options['methods'].split(',') if t.strip()]
        for key in ('replicates', 'seed', 'parallelism'):
            if options[key] is not None:
                data[key] = options[key]
        if options['param']:
            params = dict(data.get('scenario_params') or {})
            for item in options['param']:
                key, sep, value = item.partition('=')
                if not sep:
                    raise CommandError(f"--param expects KEY=VALUE; got '{item}'")
                try:
                    params[key] = json.loads(value)
                except json.JSONDecodeError:
                    params[key] = value
            data['scenario_params'] = params

        try:
            plan = build_plan(validate_config(data))
        except ValidationError as exc:
            for line in error_lines(exc):
                self.stderr.write(self.style.ERROR(line))
            raise CommandError('Invalid run config')

        for note in plan.notes:
            self.stderr.write(self.style.NOTICE(note))

        def progress(done, total):
            self.stderr.write(f'[{done}/{total}] jobs finished')

        outcome = execute(plan, options['out'], progress=progress)
        if outcome.failures:
            raise CommandError(f'{outcome.failures} job(s) failed; partial results written to {options["out"]}')
        self.stderr.write(self.style.SUCCESS(
            f"Wrote {len(outcome.records)} record(s) to {options['out']}"
        ))
