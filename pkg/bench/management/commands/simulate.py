from pathlib import Path

from django.core.management.base import BaseCommand

from bench.cli import add_dataset_arguments, check_dataset, loader_options, usage_error
from bench.harness import load_dataset, to_stream
from haphazard_bench.exceptions import HaphazardError
from streams.masking import write_stream


class Command(BaseCommand):
    help = 'Turn a complete dataset into a haphazard JSON-lines stream (or stream a real one as is).'

    def add_arguments(self, parser):
        add_dataset_arguments(parser)
        parser.add_argument('--p', type=float, default=None, help='availability probability; omit for real data')
        parser.add_argument('--seed', type=int, default=0, help='mask seed')
        parser.add_argument('--out', required=True, help='stream file to write')

    def handle(self, *args, **options):
        check_dataset(options['dataset'])
        if options['loader'] == 'stream':
            raise usage_error('simulate reads csv or libsvm datasets')
        try:
            dataset = load_dataset(options['dataset'], options['loader'], loader_options(options))
            stream = to_stream(dataset, options['p'], options['seed'])
            path = write_stream(stream, Path(options['out']))
        except (OSError, HaphazardError) as exc:
            raise usage_error(str(exc)) from exc
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(stream)} instances to {path}'))
