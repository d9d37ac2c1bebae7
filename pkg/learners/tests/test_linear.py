import itertools

import numpy as np
from django.test import SimpleTestCase

from haphazard_bench.exceptions import DivergenceError
from learners.linear import OCDS, OLVF
from streams.models import HaphazardInstance

from .factories import accuracy, prequential, random_stream, separable_stream


class OLVFTests(SimpleTestCase):
    def test_feature_space_classifier_stays_zero(self):
        for seed in range(100):
            learner = OLVF(C=1.0, C_bar=1.0, B=0.7)
            prequential(learner, random_stream(30, seed=seed))
            self.assertTrue(all(weight == 0.0 for weight in learner.w_bar.values()), seed)

    def test_confident_correct_prediction_is_passive(self):
        learner = OLVF()
        learner.w = {0: 2.0, 1: -0.5}
        instance = HaphazardInstance(t=0, features={0: 1.0}, label=1)
        self.assertEqual(learner.predict(instance).label, 1)
        learner.update(instance, 1)
        self.assertEqual(learner.w, {0: 2.0, 1: -0.5})

    def test_truncation_keeps_largest_weights(self):
        learner = OLVF(B=0.5)
        instance = HaphazardInstance(t=0, features={j: float(j + 1) for j in range(10)}, label=1)
        prequential(learner, [instance])
        nonzero = {fid for fid, weight in learner.w.items() if weight != 0.0}
        self.assertEqual(nonzero, {5, 6, 7, 8, 9})

    def test_learns_a_fully_observed_separable_stream(self):
        stream = separable_stream(500, n_features=3, seed=11, rule=lambda row: row[0] - row[1] > 0)
        predictions = prequential(OLVF(C=1.0, B=1.0), stream)
        self.assertGreater(accuracy(predictions[250:], stream[250:]), 0.9)

    def test_learns_a_masked_separable_stream(self):
        stream = separable_stream(600, n_features=5, p=0.75, seed=11)
        predictions = prequential(OLVF(C=1.0, B=1.0), stream)
        self.assertGreater(accuracy(predictions[300:], stream[300:]), 0.7)

    def test_bit_identical_reruns(self):
        stream = separable_stream(200, p=0.5, seed=12)
        self.assertEqual(prequential(OLVF(B=0.5), stream), prequential(OLVF(B=0.5), stream))

    def test_standardized_inputs(self):
        stream = separable_stream(200, p=0.75, seed=13)
        predictions = prequential(OLVF(standardize=True), stream)
        self.assertEqual(len(predictions), 200)

    def test_lambda_is_spelled_as_in_the_table(self):
        self.assertEqual(OLVF.from_params({'C': 0.01, 'C_bar': 1, 'B': 0.3, 'lambda': 1}).lam, 1)


def single_feature_stream(n, seed=0):
    rng = np.random.default_rng(seed)
    return [
        HaphazardInstance(t=t, features={0: float(value)}, label=int(value > 0))
        for t, value in enumerate(rng.normal(size=n))
    ]


class OCDSTests(SimpleTestCase):
    def test_zero_rates_leave_weights_unchanged(self):
        learner = OCDS(alpha=0.0, beta0=0.0, beta1=0.0, beta2=0.0)
        prequential(learner, separable_stream(100, p=0.6, seed=1))
        self.assertFalse(learner.W.any())
        self.assertFalse(learner.W_tilde.any())

    def test_single_feature_is_plain_lms(self):
        stream = single_feature_stream(200)
        learner = OCDS(T=0, k=1.0, beta0=0.01, beta1=0.0, beta2=0.0)
        prequential(learner, stream)
        w = 0.0
        for instance in stream:
            x = instance.features[0]
            y = 1.0 if instance.label == 1 else -1.0
            w = w - 0.01 * (-2.0 * (y - w * x) * x)
        self.assertAlmostEqual(learner.W[0], w, places=12)
        self.assertAlmostEqual(learner.W_tilde[0], w, places=12)

    def test_fully_observed_with_k_one_is_plain_lms(self):
        stream = separable_stream(200, n_features=4, seed=9)
        learner = OCDS(T=0, k=1.0, beta0=0.01, beta1=0.0, beta2=0.001)
        predictions = prequential(learner, stream)
        w = np.zeros(4)
        expected = []
        for instance in stream:
            x = np.array([instance.features[j] for j in range(4)])
            expected.append(1 if float(w @ x) > 0 else 0)
            y = 1.0 if instance.label == 1 else -1.0
            w = w - 0.01 * (-2.0 * (y - float(w @ x)) * x)
        self.assertEqual([prediction.label for prediction in predictions], expected)
        np.testing.assert_allclose(learner.W[:4], w, rtol=1e-12)

    def test_weights_stay_finite_across_the_beta_grid(self):
        grid = [0.0001, 0.001, 0.01, 0.1, 1.0]
        stream = separable_stream(150, p=0.6, seed=8)
        for beta0, beta1, beta2 in itertools.product(grid, repeat=3):
            with self.subTest(beta0=beta0, beta1=beta1, beta2=beta2):
                learner = OCDS(beta0=beta0, beta1=beta1, beta2=beta2, standardize=True)
                try:
                    with np.errstate(all='ignore'):
                        prequential(learner, stream)
                except DivergenceError:
                    # large steps may diverge; that must surface as a flagged error
                    self.assertGreater(max(beta0, beta2), 0.01)
                    continue
                self.assertTrue(np.isfinite(learner.W).all())
                self.assertTrue(np.isfinite(learner.W_tilde).all())

    def test_reconstructs_a_correlated_feature(self):
        rng = np.random.default_rng(7)
        stream = []
        for t in range(1000):
            x0 = float(rng.normal())
            features = {0: x0, 1: 2.0 * x0} if rng.random() < 0.5 else {0: x0}
            stream.append(HaphazardInstance(t=t, features=features, label=int(x0 > 0)))
        learner = OCDS()
        prequential(learner, stream)
        _, _, unobserved, reconstructed = learner.reconstruct({0: 1.5})
        self.assertEqual(len(unobserved), 1)
        self.assertAlmostEqual(reconstructed[0], 3.0, delta=0.3)

    def test_unrelated_features_reconstruct_to_zero(self):
        learner = OCDS()
        prequential(learner, [
            HaphazardInstance(t=0, features={0: 1.0}, label=1),
            HaphazardInstance(t=1, features={1: 1.0}, label=0),
        ])
        _, _, _, reconstructed = learner.reconstruct({0: 1.0})
        self.assertEqual(list(reconstructed), [0.0])

    def test_laplacian_rows_sum_to_zero(self):
        learner = OCDS()
        prequential(learner, separable_stream(100, p=0.7, seed=3))
        L = learner.laplacian()
        np.testing.assert_allclose(L, L.T)
        np.testing.assert_allclose(L.sum(axis=1), 0.0, atol=1e-12)

    def test_mixing_weight_is_reestimated(self):
        # fully observed: the reconstructed part never votes positive, the observed part is right from t=1
        learner = OCDS(T=8)
        prequential(learner, [HaphazardInstance(t=t, features={0: 1.0}, label=1) for t in range(8)])
        self.assertAlmostEqual(learner.k, 8 / 9)

    def test_divergence_is_reported(self):
        learner = OCDS(beta0=1e6)
        stream = [HaphazardInstance(t=t, features={0: 1e6}, label=t % 2) for t in range(200)]
        with np.errstate(all='ignore'), self.assertRaises(DivergenceError):
            prequential(learner, stream)

    def test_learns_a_separable_stream(self):
        stream = separable_stream(600, p=0.75, seed=5)
        predictions = prequential(OCDS(beta0=0.01), stream)
        self.assertGreater(accuracy(predictions[300:], stream[300:]), 0.65)
