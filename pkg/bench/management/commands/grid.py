from django.conf import settings
from django.core.management.base import BaseCommand

from bench.cli import (
    add_dataset_arguments, build_spec, check_dataset, check_model, evaluation_error, results_dir, usage_error,
)
from bench.grids import GridSpec, grid_search
from haphazard_bench.exceptions import ConfigurationError, HaphazardError, SearchError


class Command(BaseCommand):
    help = 'Search a model\'s hyperparameter grid by mean balanced accuracy and store the best configuration.'

    def add_arguments(self, parser):
        add_dataset_arguments(parser)
        parser.add_argument('--model', required=True)
        parser.add_argument('--grid', default=None, help='hyperparameter TOML; lists are searched')
        parser.add_argument('--p', type=float, default=None, help='availability probability of the search')
        parser.add_argument('--seeds', '--seed', dest='seeds', type=int, nargs='+', default=None)
        parser.add_argument('--repeats', type=int, default=None)
        parser.add_argument('--out', default=None, help='results directory')
        parser.add_argument('--jobs', type=int, default=1)

    def handle(self, *args, **options):
        model = options['model']
        check_dataset(options['dataset'])
        check_model(model)
        try:
            grid = GridSpec.from_file(options['grid'] or settings.HAPHAZARD_HYPERPARAMETERS, model)
        except ConfigurationError as exc:
            raise usage_error(str(exc)) from exc
        p = settings.HAPHAZARD_GRID_P if options['p'] is None else options['p']
        base = build_spec(model, options, p)

        self.stdout.write(f'Searching {len(grid)} {model} cells at p={p}')
        try:
            result = grid_search(grid, base, p=p, jobs=options['jobs'])
        except SearchError as exc:
            raise evaluation_error(str(exc)) from exc
        except (OSError, HaphazardError) as exc:
            raise usage_error(str(exc)) from exc

        path = result.save(results_dir(options) / 'grids' / f'{model}_{base.dataset_name}.json')
        self.stdout.write(self.style.SUCCESS(
            f'Best {model}: {result.best} (bAcc {100 * result.best_score:.2f}) -> {path}'
        ))
