from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from core.exceptions import ShrinkageError
from runs.harness import build_plan, error_lines, read_config, validate_config


class Command(BaseCommand):
    help = 'Check a run config (schema, cross-field rules, group indices) without running it'

    def add_arguments(self, parser):
        parser.add_argument('config', nargs='?', type=str, help='JSON run config')
        parser.add_argument(
            '--config',
            dest='config_flag',
            type=str,
            help='JSON run config (same as the positional form)',
        )

    def handle(self, *args, **options):
        path = options['config_flag'] or options['config']
        if not path:
            raise CommandError('A run config is required (--config <path>)')
        try:
            validated = validate_config(read_config(path))
            plan = build_plan(validated)
        except FileNotFoundError as exc:
            raise CommandError(f'Cannot read {exc.filename}')
        except ValidationError as exc:
            for line in error_lines(exc):
                self.stderr.write(self.style.ERROR(line))
            raise CommandError('Invalid run config')
        except ShrinkageError as exc:
            self.stderr.write(self.style.ERROR(f'config: {exc}'))
            raise CommandError('Invalid run config')

        for note in plan.notes:
            self.stderr.write(self.style.NOTICE(note))
        self.stdout.write('ok')
