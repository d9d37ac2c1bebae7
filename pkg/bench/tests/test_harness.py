import json
import tempfile
from pathlib import Path
from unittest import mock

from django.test import SimpleTestCase

from bench.harness import (
    ExperimentSpec, ResultStore, RunRecord, load_dataset, load_spec_stream, run_cells, run_experiment, run_once,
    to_stream,
)
from haphazard_bench.exceptions import DivergenceError, FormatError, InvalidInputError
from learners.base import build_learner
from learners.bayes import NB3
from streams.masking import write_stream

from .factories import write_dataset


class HarnessTestCase(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        self.dataset = write_dataset(self.dir / 'toy.csv', n=200)

    def spec(self, model='nb3', **kwargs):
        kwargs.setdefault('p', 0.75)
        return ExperimentSpec(model=model, dataset=str(self.dataset), **kwargs)


class ExperimentSpecTests(HarnessTestCase):
    def test_validation(self):
        with self.assertRaises(InvalidInputError):
            self.spec(loader='arff')
        with self.assertRaises(InvalidInputError):
            self.spec(p=1.5)
        with self.assertRaises(InvalidInputError):
            self.spec(loader='stream', p=0.5)
        with self.assertRaises(InvalidInputError):
            self.spec(repeats=0)
        with self.assertRaises(InvalidInputError):
            self.spec(seeds=[])

    def test_deterministic_models_ignore_repeats(self):
        self.assertEqual(self.spec('olvf', seeds=[3, 4], repeats=5).run_seeds(), [3, 4])

    def test_repeats_extend_and_truncate_seeds(self):
        self.assertEqual(self.spec('dynfo', seeds=[0], repeats=5).run_seeds(), [0, 1, 2, 3, 4])
        self.assertEqual(self.spec('dynfo', seeds=[0, 1, 2], repeats=2).run_seeds(), [0, 1])
        self.assertEqual(self.spec('dynfo', seeds=[7, 9]).run_seeds(), [7, 9])

    def test_spec_hash(self):
        self.assertEqual(self.spec().spec_hash, self.spec().spec_hash)
        self.assertNotEqual(self.spec().spec_hash, self.spec(params={'n': 0.5}).spec_hash)
        self.assertEqual(len(self.spec().spec_hash), 16)
        self.assertEqual(self.spec().dataset_name, 'toy')


class StreamLoadingTests(HarnessTestCase):
    def test_complete_dataset_streams_every_cell(self):
        stream = to_stream(load_dataset(self.dataset))
        self.assertEqual(len(stream), 200)
        self.assertTrue(all(len(instance) == 4 for instance in stream))

    def test_masking_thins_the_stream(self):
        stream, width = load_spec_stream(self.spec(p=0.25))
        self.assertEqual(width, 4)
        self.assertLess(sum(len(instance) for instance in stream), 0.4 * 200 * 4)

    def test_stream_files_load_as_is(self):
        path = write_stream(to_stream(load_dataset(self.dataset), p=0.5), self.dir / 'toy.jsonl')
        stream, width = load_spec_stream(ExperimentSpec(model='nb3', dataset=str(path), loader='stream'))
        self.assertEqual(len(stream), 200)
        self.assertLessEqual(width, 4)

    def test_stream_files_are_not_datasets(self):
        with self.assertRaises(InvalidInputError):
            load_dataset(self.dataset, loader='stream')


class RunExperimentTests(HarnessTestCase):
    def test_deterministic_model_has_zero_spread(self):
        record = run_experiment(self.spec('nb3', seeds=[0, 1]))
        self.assertTrue(record.ok)
        self.assertEqual(record.seeds, [0, 1])
        self.assertEqual(record.std['balanced_accuracy'], 0.0)
        first, second = ({k: v for k, v in report.items() if k != 'wall_time_s'} for report in record.reports)
        self.assertEqual(first, second)

    def test_repeats_give_one_report_each(self):
        record = run_experiment(self.spec('dynfo', params={'M': 50}, seeds=[0], repeats=5))
        self.assertEqual(len(record.reports), 5)
        self.assertEqual(record.seeds, [0, 1, 2, 3, 4])

    def test_errors_plus_correct_is_n(self):
        record = run_experiment(self.spec('olvf', seeds=[0]))
        for report in record.reports:
            self.assertEqual(report['errors'] + round(report['accuracy'] * report['n']), record.n_instances)

    def test_divergence_marks_the_run_failed(self):
        with mock.patch.object(NB3, '_update', side_effect=DivergenceError('weights diverged')):
            record = run_experiment(self.spec('nb3'))
        self.assertFalse(record.ok)
        self.assertEqual(record.status, 'failed')
        self.assertIn('weights diverged', record.diagnostic)
        self.assertIsNone(record.mean['balanced_accuracy'])

    def test_out_of_range_hyperparameter_marks_the_run_failed(self):
        record = run_experiment(self.spec('nb3', params={'n': 1.5}))
        self.assertEqual(record.status, 'failed')
        self.assertIn('invalid configuration', record.diagnostic)
        self.assertEqual(record.reports, [])

    def test_small_dataset_runs_quickly(self):
        dataset = write_dataset(self.dir / 'wpbc.csv', n=198, n_features=33)
        record = run_experiment(ExperimentSpec(model='nb3', dataset=str(dataset), p=0.5))
        self.assertLess(record.mean['wall_time_s'], 1.0)

    def test_run_once_visits_every_instance(self):
        stream, _ = load_spec_stream(self.spec())
        learner = build_learner('olvf')
        report = run_once(learner, stream)
        self.assertEqual(learner.instances_seen, len(stream))
        self.assertEqual(report.n, len(stream))

    def test_parallel_cells_match_sequential(self):
        specs = [self.spec('nb3'), self.spec('olvf'), self.spec('fae', p=0.5)]
        sequential = [record.mean['balanced_accuracy'] for record in run_cells(specs, jobs=1)]
        parallel = [record.mean['balanced_accuracy'] for record in run_cells(specs, jobs=2)]
        self.assertEqual(sequential, parallel)


class ResultStoreTests(HarnessTestCase):
    def test_save_and_load(self):
        store = ResultStore(self.dir / 'results')
        record = run_experiment(self.spec('nb3'))
        path = store.save(record)
        self.assertEqual(path.name, f'{record.spec_hash}.json')
        loaded = store.load_all()
        self.assertEqual(len(loaded), 1)
        self.assertEqual(loaded[0].to_dict(), json.loads(path.read_text()))

    def test_timestamps_stay_in_the_manifest(self):
        store = ResultStore(self.dir / 'results')
        record = run_experiment(self.spec('nb3'))
        path = store.save(record)
        first = path.read_bytes()
        store.save(record)
        self.assertEqual(path.read_bytes(), first)
        manifest = json.loads((store.directory / 'manifest.json').read_text())
        self.assertEqual(list(manifest), [path.name])

    def test_foreign_json_rejected(self):
        directory = self.dir / 'results'
        directory.mkdir()
        (directory / 'stray.json').write_text('{"colour": "blue"}')
        with self.assertRaises(FormatError):
            ResultStore(directory).load_all()

    def test_record_round_trip(self):
        record = RunRecord(spec={'model': 'nb3', 'dataset': 'a/b.csv', 'p': 0.5}, spec_hash='abc')
        self.assertEqual(RunRecord.from_dict(record.to_dict()), record)
        self.assertEqual(record.dataset, 'b')
