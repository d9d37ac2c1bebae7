try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from django.core.management.base import BaseCommand

from bench.cli import results_dir, usage_error
from bench.harness import ResultStore
from bench.metrics import SIZE_GROUPS
from bench.reports import summarize, write_csv, write_json
from haphazard_bench.exceptions import HaphazardError


def load_groups(path):
    """dataset name -> size group, from a TOML file of `name = "Small"` lines."""
    try:
        with Path(path).open('rb') as handle:
            groups = tomllib.load(handle)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise usage_error(f'cannot read groups file {path}: {exc}') from exc
    unknown = {group for group in groups.values() if group not in SIZE_GROUPS}
    if unknown:
        raise usage_error(f'unknown size groups {sorted(unknown)}; expected {", ".join(SIZE_GROUPS)}')
    return groups


class Command(BaseCommand):
    help = 'Summarize stored run records: per-cell table, win counts, group summaries and aggregate metrics.'

    def add_arguments(self, parser):
        parser.add_argument('--results', default=None, help='directory of run records')
        parser.add_argument('--out', default=None, help='where summary.csv and summary.json go')
        parser.add_argument('--groups', default=None, help='TOML mapping dataset name to Small/Medium/Large')
        parser.add_argument('--feature-pair', default=None,
                            help='FEWER,MORE datasets timed at p=0.5 for feature scalability, e.g. SUSY,HIGGS')

    def handle(self, *args, **options):
        source = results_dir({'out': options['results']})
        if not source.is_dir():
            raise usage_error(f'results directory {source} does not exist')
        try:
            records = ResultStore(source).load_all()
        except (OSError, HaphazardError) as exc:
            raise usage_error(str(exc)) from exc
        if not records:
            raise usage_error(f'no run records in {source}')

        feature_pair = None
        if options['feature_pair']:
            feature_pair = tuple(options['feature_pair'].split(','))
            if len(feature_pair) != 2:
                raise usage_error('--feature-pair takes exactly two dataset names')
        groups = load_groups(options['groups']) if options['groups'] else None

        report = summarize(records, groups=groups, feature_pair=feature_pair)
        out = Path(options['out']) if options['out'] else source
        csv_path = write_csv(report, out / 'summary.csv')
        json_path = write_json(report, out / 'summary.json')
        for model, wins in report.win_counts.items():
            self.stdout.write(f'{model}: {wins} wins')
        self.stdout.write(self.style.SUCCESS(f'Wrote {csv_path} and {json_path}'))
