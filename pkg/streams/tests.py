import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from haphazard_bench.exceptions import (
    EncodingError, FormatError, InvalidInputError, OrderingError, ParseError,
)

from .loaders import (
    Dataset, describe_dataset, encode_all_categoricals, encode_categorical, load_csv, load_libsvm, size_group,
)
from .masking import HaphazardStream, MaskConfig, as_stream, mask_stream, read_stream, write_stream
from .models import (
    FeatureRegistry, FeatureUniverse, HaphazardInstance, classify_features, intern_feature, relation,
    universe_absorb,
)


def instance(t, ids, label=0):
    return HaphazardInstance(t=t, features={fid: 1.0 for fid in ids}, label=label)


class FeatureRegistryTests(SimpleTestCase):
    def test_first_id_is_zero(self):
        self.assertEqual(intern_feature('f0', FeatureRegistry()), 0)

    def test_interning_is_idempotent(self):
        registry = FeatureRegistry()
        self.assertEqual(registry.intern('f0'), registry.intern('f0'))
        self.assertEqual(len(registry), 1)

    def test_ids_are_dense(self):
        registry = FeatureRegistry()
        self.assertEqual([registry.intern('f0'), registry.intern('f1')], [0, 1])
        self.assertEqual(registry.name_of(1), 'f1')

    def test_empty_name_rejected(self):
        with self.assertRaises(InvalidInputError):
            FeatureRegistry().intern('')


class HaphazardInstanceTests(SimpleTestCase):
    def test_duplicate_ids_rejected(self):
        with self.assertRaises(InvalidInputError):
            HaphazardInstance.from_pairs(0, [(1, 0.5), (1, 0.7)], 1)

    def test_non_finite_value_rejected(self):
        with self.assertRaises(InvalidInputError):
            HaphazardInstance(t=0, features={0: float('nan')}, label=0)

    def test_empty_instance_allowed(self):
        self.assertEqual(len(HaphazardInstance(t=3, features={}, label=1)), 0)


class FeatureUniverseTests(SimpleTestCase):
    # features F1..F5 of the worked example are ids 1..5
    def test_new_feature_is_sudden(self):
        universe = FeatureUniverse()
        universe.absorb(instance(0, [1, 2, 3, 4]))
        disposition = classify_features(instance(4, [5]), universe)
        self.assertEqual(disposition.sudden, {5})
        self.assertEqual(disposition.previously_seen, set())
        self.assertEqual(relation(instance(4, [5]), universe), 'all_sudden')

    def test_known_features_are_previously_seen(self):
        universe = FeatureUniverse()
        universe.absorb(instance(0, [1, 2, 3, 4]))
        disposition = classify_features(instance(2, [1, 2, 4]), universe)
        self.assertEqual(disposition.sudden, set())
        self.assertEqual(disposition.previously_seen, {1, 2, 4})
        self.assertEqual(relation(instance(2, [1, 2, 4]), universe), 'all_seen')

    def test_empty_instance_has_empty_disposition(self):
        disposition = classify_features(instance(0, []), FeatureUniverse())
        self.assertFalse(disposition.sudden or disposition.previously_seen)

    def test_classify_does_not_mutate(self):
        universe = FeatureUniverse()
        classify_features(instance(0, [1]), universe)
        self.assertEqual(universe.total_known, 0)

    def test_absorb_counts_union(self):
        universe = FeatureUniverse()
        universe_absorb(instance(0, [1, 2, 4]), universe)
        universe_absorb(instance(1, [1, 3]), universe)
        self.assertEqual(universe.total_known, 4)
        self.assertEqual(universe.records[1].observation_count, 2)
        self.assertEqual(universe.records[1].last_seen, 1)
        self.assertEqual(universe.records[2].first_seen, 0)

    def test_absorb_empty_instance_is_noop(self):
        universe = FeatureUniverse()
        universe.absorb(instance(0, [1]))
        universe.absorb(instance(1, []))
        self.assertEqual(universe.total_known, 1)
        self.assertEqual(universe.records[1].last_seen, 0)

    def test_out_of_order_absorb_rejected(self):
        universe = FeatureUniverse()
        universe.absorb(instance(5, [1]))
        with self.assertRaises(OrderingError):
            universe.absorb(instance(4, [1]))

    def test_total_known_matches_brute_force_union(self):
        rng = np.random.default_rng(7)
        universe = FeatureUniverse()
        seen = set()
        for t in range(200):
            ids = {int(i) for i in rng.choice(40, size=rng.integers(0, 6), replace=False)}
            universe.absorb(instance(t, ids))
            seen |= ids
            self.assertEqual(universe.total_known, len(seen))

    def test_absorbed_instance_has_no_sudden_features(self):
        universe = FeatureUniverse()
        x = instance(0, [3, 8])
        classify_features(x, universe)
        universe.absorb(x)
        self.assertEqual(classify_features(x, universe).sudden, set())

    def test_obsolete_features_stay_known(self):
        universe = FeatureUniverse()
        universe.absorb(instance(0, [1, 2]))
        universe.absorb(instance(50, [2]))
        self.assertEqual(universe.obsolete(t=50, horizon=10), {1})
        self.assertIn(1, universe)


class LoaderTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, name, text):
        path = Path(self.tmp.name) / name
        path.write_text(text)
        return path

    def test_load_csv(self):
        path = self.write('d.csv', 'a,b,y\n1,2,0\n3,4,1\n5,6,1\n')
        dataset = load_csv(path, 'y')
        self.assertEqual(len(dataset), 3)
        self.assertEqual(dataset.feature_names, ['a', 'b'])
        self.assertEqual(dataset.labels.tolist(), [0, 1, 1])

    def test_missing_marker(self):
        dataset = load_csv(self.write('d.csv', 'a,b,y\n?,2,0\n'), 'y', missing_markers={'?'})
        self.assertTrue(np.isnan(dataset.values[0, 0]))
        self.assertEqual(dataset.missing_count, 1)

    def test_custom_markers_and_delimiter(self):
        path = self.write('d.tsv', '-1\t4\t+1\nnan\t5\t-1\n')
        dataset = load_csv(path, 2, missing_markers=('-1', 'nan'), delimiter='\t', header=False)
        self.assertEqual(dataset.missing_count, 2)
        self.assertEqual(dataset.labels.tolist(), [1, 0])

    def test_missing_label_column(self):
        with self.assertRaises(FormatError):
            load_csv(self.write('d.csv', 'a,b\n1,2\n'), 'y')

    def test_non_numeric_cell_reports_location(self):
        with self.assertRaises(ParseError) as caught:
            load_csv(self.write('d.csv', 'a,b,y\n1,2,0\n1,x,1\n'), 'y')
        self.assertEqual(caught.exception.row, 3)
        self.assertEqual(caught.exception.column, 'b')

    def test_inconsistent_width(self):
        with self.assertRaises(FormatError):
            load_csv(self.write('d.csv', 'a,b,y\n1,2,0\n1,1\n'), 'y')

    def test_libsvm_sparse_row(self):
        dataset = load_libsvm(self.write('d.svm', '+1 1:0.5 3:2.0\n-1\n'))
        self.assertEqual(dataset.n_features, 3)
        self.assertEqual(dataset.values[0, 0], 0.5)
        self.assertTrue(np.isnan(dataset.values[0, 1]))
        self.assertEqual(dataset.values[0, 2], 2.0)
        self.assertTrue(np.isnan(dataset.values[1]).all())
        self.assertEqual(dataset.labels.tolist(), [1, 0])

    def test_libsvm_duplicate_index(self):
        with self.assertRaises(ParseError):
            load_libsvm(self.write('d.svm', '1 2:1 2:3\n'))

    def test_libsvm_malformed_token(self):
        with self.assertRaises(ParseError):
            load_libsvm(self.write('d.svm', '1 2-1\n'))

    def test_bracket_median(self):
        path = self.write('d.csv', 'age,weight,y\n"[10,20]","[75,100]",1\n[0-10),?,0\n')
        dataset = load_csv(path, 'y', categorical=('age', 'weight'))
        dataset = encode_all_categoricals(dataset, ['age', 'weight'], 'bracket_median')
        self.assertEqual(dataset.values[:, 0].tolist(), [15.0, 5.0])
        self.assertEqual(dataset.values[0, 1], 87.5)
        self.assertTrue(np.isnan(dataset.values[1, 1]))
        self.assertEqual(dataset.provenance['encodings'], {'age': 'bracket_median', 'weight': 'bracket_median'})

    def test_integer_codes_follow_first_appearance(self):
        path = self.write('d.csv', 'c,y\nA,1\nB,0\nA,1\n')
        dataset = encode_categorical(load_csv(path, 'y', categorical=('c',)), 'c', 'integer_codes')
        self.assertEqual(dataset.values[:, 0].tolist(), [1.0, 2.0, 1.0])
        self.assertEqual(dataset.raw, {})

    def test_bracket_median_rejects_plain_strings(self):
        dataset = load_csv(self.write('d.csv', 'c,y\nA,1\n'), 'y', categorical=('c',))
        with self.assertRaises(EncodingError):
            encode_categorical(dataset, 'c', 'bracket_median')

    def test_describe_dataset(self):
        summary = describe_dataset(load_csv(self.write('d.csv', 'a,y\n1,1\n?,0\n2,0\n3,0\n'), 'y'))
        self.assertEqual(summary['imbalance_ratio'], 25.0)
        self.assertEqual(summary['missing_values'], 1)
        self.assertEqual(summary['size_group'], 'Small')

    def test_size_groups(self):
        self.assertEqual([size_group(10_000), size_group(10_001), size_group(100_001)],
                         ['Small', 'Medium', 'Large'])


def complete_dataset(rows, columns, seed=0):
    rng = np.random.default_rng(seed)
    return Dataset(
        values=rng.normal(size=(rows, columns)),
        labels=rng.integers(0, 2, size=rows),
        feature_names=[f'f{i}' for i in range(columns)],
    )


class MaskStreamTests(SimpleTestCase):
    def test_full_availability_keeps_every_cell(self):
        dataset = complete_dataset(50, 4)
        stream = mask_stream(dataset, MaskConfig(p=1.0, seed=3))
        self.assertTrue(all(len(x) == 4 for x in stream))
        self.assertEqual(stream[7].features[2], dataset.values[7, 2])

    def test_zero_availability_empties_every_instance(self):
        stream = mask_stream(complete_dataset(50, 4), MaskConfig(p=0.0, seed=3))
        self.assertTrue(all(len(x) == 0 for x in stream))
        self.assertEqual(len(stream), 50)

    def test_labels_untouched(self):
        dataset = complete_dataset(30, 3)
        self.assertEqual(mask_stream(dataset, MaskConfig(0.5, 1)).labels, dataset.labels.tolist())

    def test_existing_missing_values_stay_missing(self):
        dataset = complete_dataset(20, 3)
        dataset.values[:, 1] = np.nan
        stream = mask_stream(dataset, MaskConfig(p=1.0, seed=0))
        self.assertTrue(all(1 not in x.features for x in stream))

    def test_same_seed_same_stream(self):
        dataset = complete_dataset(100, 6)
        first = mask_stream(dataset, MaskConfig(0.5, 11))
        second = mask_stream(dataset, MaskConfig(0.5, 11))
        self.assertEqual([x.features for x in first], [x.features for x in second])

    def test_per_feature_availability(self):
        dataset = complete_dataset(10_000, 20)
        for p in (0.25, 0.5, 0.75):
            stream = mask_stream(dataset, MaskConfig(p, 2024))
            counts = np.zeros(20)
            for x in stream:
                counts[list(x.features)] += 1
            availability = counts / len(stream)
            self.assertTrue(np.all(np.abs(availability - p) <= 0.02), (p, availability))

    def test_draws_are_row_major(self):
        dataset = complete_dataset(5, 3)
        draws = np.random.default_rng(9).random((5, 3))
        stream = mask_stream(dataset, MaskConfig(0.5, 9))
        expected = [set(np.flatnonzero(row < 0.5).tolist()) for row in draws]
        self.assertEqual([set(x.features) for x in stream], expected)

    def test_invalid_probability(self):
        with self.assertRaises(InvalidInputError):
            MaskConfig(p=1.5)

    def test_real_stream_presence_is_non_missingness(self):
        dataset = complete_dataset(10, 2)
        dataset.values[3, 0] = np.nan
        stream = as_stream(dataset)
        self.assertEqual(set(stream[3].features), {1})
        self.assertEqual(set(stream[4].features), {0, 1})

    def test_jsonl_round_trip(self):
        dataset = complete_dataset(25, 4)
        stream = mask_stream(dataset, MaskConfig(0.5, 5))
        with tempfile.TemporaryDirectory() as tmp:
            path = write_stream(stream, Path(tmp) / 's.jsonl')
            loaded = read_stream(path)
        self.assertEqual(loaded.registry.names, ['f0', 'f1', 'f2', 'f3'])
        for original, reread in zip(stream, loaded):
            self.assertEqual(reread.features, original.features)
            self.assertEqual((reread.t, reread.label), (original.t, original.label))

    def test_rewriting_a_read_stream_is_byte_identical(self):
        # the first instance only carries the last feature, so first-seen order differs from id order
        stream = HaphazardStream(
            instances=[instance(0, [2]), HaphazardInstance(t=1, features={0: 5.0, 2: 1.0}, label=1)],
            registry=FeatureRegistry(['a', 'b', 'c']),
        )
        with tempfile.TemporaryDirectory() as tmp:
            first = write_stream(stream, Path(tmp) / 'first.jsonl')
            second = write_stream(read_stream(first), Path(tmp) / 'second.jsonl')
            self.assertEqual(first.read_bytes(), second.read_bytes())
            self.assertEqual(read_stream(second).registry.names, ['a', 'b', 'c'])

    def test_headerless_files_keep_their_ids(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 's.jsonl'
            path.write_text('{"t":0,"x":{"2":1.0},"y":0}\n{"t":1,"x":{"0":5.0},"y":1}\n')
            loaded = read_stream(path)
        self.assertEqual(loaded[0].features, {2: 1.0})
        self.assertEqual(loaded.registry.names, ['0', '1', '2'])

    def test_ids_outside_the_header_rejected(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 's.jsonl'
            path.write_text('{"features":["a"]}\n{"t":0,"x":{"3":1.0},"y":0}\n')
            with self.assertRaises(FormatError):
                read_stream(path)
