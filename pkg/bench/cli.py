"""Argument plumbing shared by the bench management commands."""
import json
from pathlib import Path

from decouple import config
from django.conf import settings
from django.core.management.base import CommandError

from haphazard_bench.exceptions import ConfigurationError, FormatError, HaphazardError
from learners.base import is_deterministic, learner_class

from .grids import GridSpec, load_best_config
from .harness import LOADERS, ExperimentSpec

USAGE = 2
EVALUATION = 1


def usage_error(message):
    return CommandError(message, returncode=USAGE)


def evaluation_error(message):
    return CommandError(message, returncode=EVALUATION)


def add_dataset_arguments(parser):
    parser.add_argument('--dataset', required=True, help='CSV, LIBSVM or JSON-lines stream file')
    parser.add_argument('--loader', choices=LOADERS, default='csv')
    parser.add_argument('--label-col', default='label', help='label column name (or index without a header)')
    parser.add_argument('--missing', default=None, help='comma-separated missing-value markers')
    parser.add_argument('--no-header', action='store_true')
    parser.add_argument('--delimiter', default=',')
    parser.add_argument('--categorical', default=None,
                        help='comma-separated column=scheme pairs, scheme integer_codes or bracket_median')


def loader_options(options):
    result = {
        'label_column': options['label_col'],
        'delimiter': options['delimiter'],
        'header': not options['no_header'],
    }
    if options['missing'] is not None:
        result['missing'] = options['missing'].split(',')
    if options['categorical']:
        try:
            result['categorical'] = dict(item.split('=', 1) for item in options['categorical'].split(','))
        except ValueError:
            raise usage_error(f'--categorical expects column=scheme pairs, got {options["categorical"]!r}') from None
    return result


def check_dataset(path):
    if not Path(path).is_file():
        raise usage_error(f'dataset {path} does not exist')


def check_model(name):
    try:
        learner_class(name)
    except ConfigurationError as exc:
        raise usage_error(str(exc)) from exc


def results_dir(options):
    """HAPHAZARD_RESULTS_DIR in the environment wins over --out."""
    override = config('HAPHAZARD_RESULTS_DIR', default=None)
    if override:
        return Path(override)
    return Path(options.get('out') or settings.HAPHAZARD_RESULTS_DIR)


def seeds_for(model, options):
    if options.get('seeds'):
        return list(options['seeds'])
    seeds = list(settings.HAPHAZARD_DEFAULT_SEEDS)
    return seeds[:1] if is_deterministic(model) else seeds


def params_for(model, config_path):
    """Hyperparameters from a grid result (JSON) or the first cell of a TOML table."""
    path = Path(config_path)
    if path.suffix == '.json':
        try:
            config_model, params = load_best_config(path)
        except FormatError as exc:
            raise usage_error(str(exc)) from exc
        if config_model != model:
            raise usage_error(f'{path} holds a {config_model} configuration, not {model}')
        return params
    try:
        return GridSpec.from_file(path, model).default()
    except ConfigurationError as exc:
        raise usage_error(str(exc)) from exc


def build_spec(model, options, p, params=None):
    try:
        return ExperimentSpec(
            model=model,
            dataset=options['dataset'],
            params=params or {},
            loader=options['loader'],
            loader_options=loader_options(options),
            p=p,
            seeds=seeds_for(model, options),
            repeats=options.get('repeats'),
        )
    except HaphazardError as exc:
        raise usage_error(str(exc)) from exc


def dump(data):
    return json.dumps(data, sort_keys=True, indent=2)

