from django.conf import settings
from django.core.management.base import BaseCommand

from bench.cli import (
    add_dataset_arguments, build_spec, check_dataset, check_model, evaluation_error, params_for, results_dir,
    usage_error,
)
from bench.harness import ResultStore, run_cells
from haphazard_bench.exceptions import HaphazardError


class Command(BaseCommand):
    help = 'Evaluate models prequentially on a dataset and store one RunRecord per (model, p) cell.'

    def add_arguments(self, parser):
        add_dataset_arguments(parser)
        parser.add_argument('--model', nargs='+', required=True)
        parser.add_argument('--p', type=float, nargs='+', default=None,
                            help='availability probabilities; omit for real haphazard data')
        parser.add_argument('--seeds', '--seed', dest='seeds', type=int, nargs='+', default=None)
        parser.add_argument('--repeats', type=int, default=None)
        parser.add_argument('--config', default=None, help='grid result JSON or hyperparameter TOML')
        parser.add_argument('--out', default=None, help='results directory')
        parser.add_argument('--jobs', type=int, default=1)

    def handle(self, *args, **options):
        check_dataset(options['dataset'])
        for model in options['model']:
            check_model(model)
        if options['repeats'] is None and not options['seeds']:
            options['repeats'] = settings.HAPHAZARD_DEFAULT_REPEATS
        config = options['config'] or settings.HAPHAZARD_HYPERPARAMETERS

        specs = [
            build_spec(model, options, p, params_for(model, config))
            for model in options['model']
            for p in (options['p'] or [None])
        ]
        try:
            records = run_cells(specs, jobs=options['jobs'])
        except (OSError, HaphazardError) as exc:
            raise usage_error(str(exc)) from exc

        store = ResultStore(results_dir(options))
        failed = []
        for record in records:
            path = store.save(record)
            if record.ok:
                self.stdout.write(f'{record.model} p={record.p}: bAcc {100 * record.mean["balanced_accuracy"]:.2f} '
                                  f'-> {path}')
            else:
                failed.append(record)
                self.stderr.write(f'{record.model} p={record.p} failed: {record.diagnostic}')
        if failed:
            raise evaluation_error(f'{len(failed)} of {len(records)} runs failed')
        self.stdout.write(self.style.SUCCESS(f'Stored {len(records)} run records in {store.directory}'))
