from django.core.management.base import BaseCommand

from bench.cli import add_dataset_arguments, check_dataset, dump, loader_options, usage_error
from bench.harness import load_dataset
from haphazard_bench.exceptions import HaphazardError
from streams.loaders import describe_dataset


class Command(BaseCommand):
    help = 'Print instances, features, imbalance ratio, missing values and size group of a dataset.'

    def add_arguments(self, parser):
        add_dataset_arguments(parser)

    def handle(self, *args, **options):
        check_dataset(options['dataset'])
        if options['loader'] == 'stream':
            raise usage_error('describe reads csv or libsvm datasets')
        try:
            dataset = load_dataset(options['dataset'], options['loader'], loader_options(options))
        except (OSError, HaphazardError) as exc:
            raise usage_error(str(exc)) from exc
        self.stdout.write(dump(describe_dataset(dataset)))
