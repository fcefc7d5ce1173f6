from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import ShrinkageError
from core.serializers import render_json
from evaluation.report import aggregate, read_records
from runs.harness import AGGREGATES_FILE


class Command(BaseCommand):
    help = 'Recompute aggregates.json from a records.csv'

    def add_arguments(self, parser):
        parser.add_argument('records', nargs='?', type=str, help='Path to records.csv')
        parser.add_argument(
            '--records',
            dest='records_flag',
            type=str,
            help='Path to records.csv (same as the positional form)',
        )
        parser.add_argument(
            '--out',
            type=str,
            help='Output directory (default: the directory of the records file)',
        )

    def handle(self, *args, **options):
        if not (options['records_flag'] or options['records']):
            raise CommandError('A records file is required (--records <path>)')
        path = Path(options['records_flag'] or options['records'])
        if not path.exists():
            raise CommandError(f'{path} does not exist')
        try:
            report = aggregate(read_records(path))
        except ShrinkageError as exc:
            raise CommandError(str(exc))

        out = Path(options['out']) if options['out'] else path.parent
        out.mkdir(parents=True, exist_ok=True)
        (out / AGGREGATES_FILE).write_bytes(render_json(report.to_dict()))
        self.stderr.write(self.style.SUCCESS(f'Wrote {out / AGGREGATES_FILE} ({len(report.groups)} group(s))'))
