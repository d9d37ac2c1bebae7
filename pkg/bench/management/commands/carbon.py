from pathlib import Path

from django.core.management.base import BaseCommand

from bench.cli import dump, usage_error
from bench.metrics import DEFAULT_PROFILES, HardwareProfile, carbon_estimate
from haphazard_bench.exceptions import HaphazardError


class Command(BaseCommand):
    help = 'Estimate energy (kWh) and carbon (kg CO2e) of a total run time on a hardware profile.'

    def add_arguments(self, parser):
        parser.add_argument('--time', type=float, nargs='+', required=True, help='run times in seconds; summed')
        parser.add_argument('--profile', default='dgx128',
                            help=f'hardware profile JSON file or one of: {", ".join(sorted(DEFAULT_PROFILES))}')
        parser.add_argument('--out', default=None, help='write the estimate to this JSON file')

    def handle(self, *args, **options):
        if any(seconds < 0 for seconds in options['time']):
            raise usage_error('run times must be non-negative')
        profile = DEFAULT_PROFILES.get(options['profile'])
        if profile is None:
            try:
                profile = HardwareProfile.from_json(options['profile'])
            except (OSError, HaphazardError) as exc:
                raise usage_error(str(exc)) from exc

        total = sum(options['time'])
        estimate = {'wall_time_s': total, **carbon_estimate(total, profile)}
        text = dump(estimate)
        if options['out']:
            Path(options['out']).write_text(text + '\n')
        self.stdout.write(text)
