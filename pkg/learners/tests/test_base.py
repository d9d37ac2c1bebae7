from django.test import SimpleTestCase

from haphazard_bench.exceptions import ConfigurationError, ProtocolError
from learners.base import (
    RollingAccuracy, RunningStandardizer, build_learner, is_deterministic, known_models,
)
from streams.models import HaphazardInstance


def instance(t, label=0):
    return HaphazardInstance(t=t, features={0: 1.0}, label=label)


class RegistryTests(SimpleTestCase):
    def test_every_model_is_registered(self):
        self.assertEqual(known_models(), ['auxdrop', 'dynfo', 'fae', 'nb3', 'ocds', 'olvf', 'orf3v'])

    def test_deterministic_flags(self):
        flags = {name: is_deterministic(name) for name in known_models()}
        self.assertEqual({name for name, flag in flags.items() if flag}, {'nb3', 'fae', 'olvf'})

    def test_unknown_model_lists_known_ones(self):
        with self.assertRaisesMessage(ConfigurationError, 'known models: auxdrop, dynfo'):
            build_learner('ovfm')

    def test_unknown_hyperparameter_rejected(self):
        with self.assertRaises(ConfigurationError):
            build_learner('nb3', {'n': 0.5, 'bogus': 1})

    def test_table_names_map_to_arguments(self):
        learner = build_learner('orf3v', {'forestSize': 3, 'updateStrategy': 'random'}, seed=4)
        self.assertEqual(learner.forest_size, 3)
        self.assertEqual(learner.update_strategy, 'random')

    def test_aux_layer_defaults_to_five_times_width(self):
        learner = build_learner('auxdrop', {}, n_features=8)
        self.assertEqual(learner.layer.size, 40)
        self.assertEqual(learner.layer.capacity, 8)


class PrequentialGuardTests(SimpleTestCase):
    def setUp(self):
        self.learner = build_learner('nb3')

    def test_update_without_predict(self):
        with self.assertRaises(ProtocolError):
            self.learner.update(instance(0), 0)

    def test_predict_twice_without_update(self):
        self.learner.predict(instance(0))
        with self.assertRaises(ProtocolError):
            self.learner.predict(instance(1))

    def test_revisiting_an_instance(self):
        self.learner.predict(instance(0))
        self.learner.update(instance(0), 0)
        with self.assertRaises(ProtocolError):
            self.learner.predict(instance(0))

    def test_counter(self):
        for t in range(3):
            self.learner.predict(instance(t))
            self.learner.update(instance(t), 1)
        self.assertEqual(self.learner.instances_seen, 3)


class HelperTests(SimpleTestCase):
    def test_rolling_accuracy_is_laplace_smoothed(self):
        acc = RollingAccuracy(window=3)
        self.assertEqual(acc.value, 0.5)
        for outcome in (True, True, False, False):
            acc.add(outcome)
        self.assertEqual(len(acc), 3)
        self.assertAlmostEqual(acc.value, 2 / 5)
        self.assertAlmostEqual(acc.error_rate, 2 / 3)

    def test_standardizer(self):
        scaler = RunningStandardizer()
        self.assertEqual(scaler.transform({0: 5.0}), {0: 0.0})
        for value in (1.0, 2.0, 3.0):
            scaler.absorb({0: value})
        self.assertAlmostEqual(scaler.transform({0: 3.0})[0], 1.0)
