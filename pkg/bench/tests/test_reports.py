import csv
import random
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from bench.reports import SUMMARY_COLUMNS, group_summaries, summarize, win_counts, write_csv, write_json

from .factories import make_record

# one dataset per size group, sized by instance count
GROUP_SIZES = {'Small': 500, 'Medium': 50_000, 'Large': 500_000}


def grouped_records(model, means, times=(1.0, 1.0, 1.0), stds=(0.0, 0.0, 0.0)):
    return [
        make_record(model, f'{group.lower()}-set', bacc=mean / 100, std=std / 100, time=time,
                    n_instances=GROUP_SIZES[group])
        for group, mean, time, std in zip(GROUP_SIZES, means, times, stds)
    ]


class WinCountTests(SimpleTestCase):
    def test_single_model_wins_every_cell(self):
        records = [make_record('olvf', dataset, p=p) for dataset in ('wbc', 'ipd') for p in (0.25, 0.5, 0.75)]
        winners, counts = win_counts(records)
        self.assertEqual(counts, {'olvf': 6})
        self.assertEqual(winners['wbc@0.5'], 'olvf')

    def test_best_mean_bacc_wins(self):
        records = [make_record('olvf', 'wbc', bacc=0.61), make_record('nb3', 'wbc', bacc=0.55)]
        self.assertEqual(win_counts(records)[1], {'nb3': 0, 'olvf': 1})

    def test_ties_go_to_the_alphabetically_first_model(self):
        records = [make_record('olvf', 'wbc', bacc=0.6), make_record('dynfo', 'wbc', bacc=0.6)]
        self.assertEqual(win_counts(records)[0], {'wbc@0.5': 'dynfo'})

    def test_failed_runs_cannot_win(self):
        records = [make_record('olvf', 'wbc', bacc=0.6), make_record('auxdrop', 'wbc', status='failed')]
        self.assertEqual(win_counts(records)[1], {'auxdrop': 0, 'olvf': 1})


class GroupSummaryTests(SimpleTestCase):
    def test_groups_follow_instance_counts(self):
        summaries = group_summaries(grouped_records('nb3', (53.95, 54.52, 50.00)))
        self.assertEqual(list(summaries['nb3']), ['Small', 'Medium', 'Large'])
        self.assertAlmostEqual(summaries['nb3']['Medium'].mean_bacc, 54.52)

    def test_explicit_groups_override_sizes(self):
        records = [make_record('nb3', 'susy', n_instances=500)]
        summaries = group_summaries(records, groups={'susy': 'Large'})
        self.assertEqual(list(summaries['nb3']), ['Large'])

    def test_empty_group_is_omitted_with_a_warning(self):
        records = grouped_records('nb3', (53.95, 54.52, 50.00))[:2]
        with self.assertLogs('bench.reports', level='WARNING') as logs:
            summaries = group_summaries(records)
        self.assertNotIn('Large', summaries['nb3'])
        self.assertIn('No Large results for nb3', logs.output[0])


class SummarizeTests(SimpleTestCase):
    def test_performance_row_from_group_means(self):
        records = grouped_records('nb3', (53.95, 54.52, 50.00)) + grouped_records('auxdrop', (59.33, 59.97, 59.16))
        report = summarize(records)
        self.assertAlmostEqual(report.aggregates['nb3']['performance'], 52.82, delta=0.01)
        self.assertAlmostEqual(report.aggregates['nb3']['data_scalability'], 0.02, delta=0.01)
        self.assertAlmostEqual(report.aggregates['auxdrop']['performance'], 59.49, delta=0.01)
        self.assertAlmostEqual(report.aggregates['auxdrop']['data_scalability'], 0.38, delta=0.01)

    def test_deterministic_models_skip_consistency(self):
        records = grouped_records('olvf', (61.16, 63.12, 52.03)) + grouped_records(
            'ocds', (56.49, 56.68, 51.61), stds=(1.19, 0.66, 0.18))
        report = summarize(records)
        self.assertIsNone(report.aggregates['olvf']['prediction_consistency'])
        self.assertAlmostEqual(report.aggregates['ocds']['prediction_consistency'], 0.68, delta=0.01)

    def test_feature_pair_ratio(self):
        records = [
            make_record('auxdrop', 'SUSY', time=6054.62, n_instances=1_000_000),
            make_record('auxdrop', 'HIGGS', time=6039.45, n_instances=1_000_000),
        ]
        report = summarize(records, feature_pair=('SUSY', 'HIGGS'))
        self.assertAlmostEqual(report.aggregates['auxdrop']['feature_scalability'], 1.00, delta=0.01)
        self.assertEqual(report.stars['auxdrop']['feature_scalability'], 5)

    def test_stars_follow_aggregates(self):
        report = summarize(grouped_records('auxdrop', (59.33, 59.97, 59.16), times=(50.0, 80.0, 120.0)))
        self.assertEqual(report.stars['auxdrop']['performance'], 4)
        self.assertEqual(report.stars['auxdrop']['data_scalability'], 5)
        self.assertEqual(report.stars['auxdrop']['speed'], 5)


class WriteReportTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        self.records = (grouped_records('nb3', (53.95, 54.52, 50.00))
                        + grouped_records('ocds', (56.49, 56.68, 51.61), stds=(1.19, 0.66, 0.18))
                        + [make_record('olvf', 'wbc', status='failed')])

    def test_csv_layout(self):
        path = write_csv(summarize(self.records), self.dir / 'summary.csv')
        with path.open(newline='') as handle:
            rows = list(csv.reader(handle))
        self.assertEqual(rows[0], SUMMARY_COLUMNS)
        self.assertEqual(len(rows), 1 + len(self.records))
        failed = next(row for row in rows if row[-1] == 'failed')
        self.assertEqual(failed[3:10], [''] * 7)

    def test_regeneration_is_byte_identical(self):
        first = summarize(self.records)
        shuffled = list(self.records)
        random.Random(3).shuffle(shuffled)
        second = summarize(shuffled)
        paths = [(write_csv(report, self.dir / f'{name}.csv'), write_json(report, self.dir / f'{name}.json'))
                 for name, report in (('first', first), ('second', second))]
        self.assertEqual(paths[0][0].read_bytes(), paths[1][0].read_bytes())
        self.assertEqual(paths[0][1].read_bytes(), paths[1][1].read_bytes())
