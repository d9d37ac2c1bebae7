import tempfile
from pathlib import Path
from unittest import mock

from django.conf import settings
from django.test import SimpleTestCase

from bench.grids import GridResult, GridSpec, grid_search, load_best_config
from bench.harness import ExperimentSpec, RunRecord, run_experiment
from haphazard_bench.exceptions import ConfigurationError, FormatError, SearchError
from learners.base import build_learner, known_models

from .factories import write_dataset


def scored_record(score):
    if score is None:
        return RunRecord(spec={}, spec_hash='x', status='failed', diagnostic='diverged',
                         mean={'balanced_accuracy': None})
    return RunRecord(spec={}, spec_hash='x', mean={'balanced_accuracy': score})


class GridSpecTests(SimpleTestCase):
    def test_lists_are_axes_and_scalars_fixed(self):
        grid = GridSpec.from_table('fae', {'m': 5, 'M': [0.2, 0.4], 'N': 50})
        self.assertEqual(grid.axes, {'M': [0.2, 0.4]})
        self.assertEqual(grid.fixed, {'m': 5, 'N': 50})
        self.assertEqual(len(grid), 2)

    def test_cells_vary_the_last_axis_fastest(self):
        grid = GridSpec.from_table('dynfo', {'alpha': [0.1, 0.5], 'beta': [0.5, 0.8], 'N': 20})
        cells = [(cell['alpha'], cell['beta']) for cell in grid.cells()]
        self.assertEqual(cells, [(0.1, 0.5), (0.1, 0.8), (0.5, 0.5), (0.5, 0.8)])
        self.assertEqual(grid.default(), {'N': 20, 'alpha': 0.1, 'beta': 0.5})

    def test_empty_axis_rejected(self):
        with self.assertRaises(ConfigurationError):
            GridSpec.from_table('nb3', {'n': []})

    def test_file_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'grid.toml'
            with self.assertRaises(ConfigurationError):
                GridSpec.from_file(path, 'nb3')
            path.write_text('[nb3\n')
            with self.assertRaises(ConfigurationError):
                GridSpec.from_file(path, 'nb3')
            path.write_text('[olvf]\nC = [1.0]\n')
            with self.assertRaises(ConfigurationError):
                GridSpec.from_file(path, 'nb3')

    def test_shipped_tables_build_every_model(self):
        for model in known_models():
            with self.subTest(model=model):
                grid = GridSpec.from_file(settings.HAPHAZARD_HYPERPARAMETERS, model)
                for cell in (grid.cells()[0], grid.cells()[-1]):
                    self.assertEqual(build_learner(model, cell, n_features=4).name, model)

    def test_shipped_grid_sizes(self):
        sizes = {model: len(GridSpec.from_file(settings.HAPHAZARD_HYPERPARAMETERS, model))
                 for model in ('nb3', 'fae', 'olvf', 'orf3v', 'auxdrop')}
        self.assertEqual(sizes, {'nb3': 5, 'fae': 5, 'olvf': 189, 'orf3v': 60, 'auxdrop': 14})


class GridSearchTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        # only f0 carries signal; the other nine features are noise for NB3's top-n selection
        self.dataset = write_dataset(self.dir / 'planted.csv', n=400, n_features=10, rule=lambda row: row[0] > 0)

    def base(self, model='nb3'):
        return ExperimentSpec(model=model, dataset=str(self.dataset))

    def test_single_cell_is_returned(self):
        grid = GridSpec.from_table('nb3', {'n': [0.4]})
        result = grid_search(grid, self.base())
        self.assertEqual(result.best, {'n': 0.4})
        self.assertEqual(len(result.cells), 1)

    def test_argmax_matches_exhaustive_reruns(self):
        grid = GridSpec.from_table('nb3', {'n': [0.2, 0.4, 0.6, 0.8, 1.0]})
        result = grid_search(grid, self.base(), p=0.5)
        scores = [
            run_experiment(ExperimentSpec(model='nb3', dataset=str(self.dataset), params=cell, p=0.5))
            .mean['balanced_accuracy']
            for cell in grid.cells()
        ]
        best = max(range(len(scores)), key=lambda index: (scores[index], -index))
        self.assertEqual(result.best, grid.cells()[best])
        self.assertEqual(result.best_score, scores[best])
        self.assertEqual([cell['score'] for cell in result.cells], scores)

    def test_higher_score_wins_and_ties_keep_the_first_cell(self):
        grid = GridSpec.from_table('nb3', {'n': [0.2, 0.4, 0.6]})
        with mock.patch('bench.grids.load_spec_stream', return_value=([], 10)), \
                mock.patch('bench.grids.run_experiment',
                           side_effect=[scored_record(s) for s in (0.55, 0.61, 0.61)]):
            result = grid_search(grid, self.base())
        self.assertEqual(result.best, {'n': 0.4})
        self.assertEqual(result.best_score, 0.61)

    def test_failed_cells_are_kept_with_no_score(self):
        grid = GridSpec.from_table('nb3', {'n': [0.2, 0.4]})
        with mock.patch('bench.grids.load_spec_stream', return_value=([], 10)), \
                mock.patch('bench.grids.run_experiment', side_effect=[scored_record(None), scored_record(0.5)]):
            result = grid_search(grid, self.base())
        self.assertEqual(result.best, {'n': 0.4})
        self.assertIsNone(result.cells[0]['score'])
        self.assertEqual(result.cells[0]['status'], 'failed')

    def test_invalid_cell_scores_no_result(self):
        grid = GridSpec.from_table('nb3', {'n': [1.5, 0.6]})
        result = grid_search(grid, self.base())
        self.assertEqual(result.best, {'n': 0.6})
        self.assertEqual(result.cells[0]['status'], 'failed')
        self.assertIsNone(result.cells[0]['score'])

    def test_every_cell_failing_is_a_search_error(self):
        grid = GridSpec.from_table('nb3', {'n': [0.2, 0.4]})
        with mock.patch('bench.grids.load_spec_stream', return_value=([], 10)), \
                mock.patch('bench.grids.run_experiment', side_effect=[scored_record(None)] * 2):
            with self.assertRaises(SearchError):
                grid_search(grid, self.base())

    def test_best_config_round_trip(self):
        path = GridResult(model='olvf', p=0.5, best={'C': 1.0, 'B': 0.5}, best_score=0.7).save(self.dir / 'g.json')
        self.assertEqual(load_best_config(path), ('olvf', {'C': 1.0, 'B': 0.5}))
        path.write_text('[]')
        with self.assertRaises(FormatError):
            load_best_config(path)
