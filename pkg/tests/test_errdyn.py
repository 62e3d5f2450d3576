# tests/test_errdyn.py
import os
import sys
import unittest

import numpy as np

# Add root directory to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from constants import COVARIANCE_REGULARIZATION, MODALITY_COMMUNICATION
from core.errdyn import (
    FeatureScaler,
    GeneralizedSample,
    GngNode,
    communication_samples,
    extract_letters,
    generalized_error,
    gng_fit,
    null_force_predict,
    null_force_statistics,
    positional_samples,
    quantization_error
)
from core.exceptions import DimensionMismatchError, InsufficientDataError, ParameterError
from core.scenario import Scenario


def two_blobs(n_per_blob=200, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal((0.0, 0.0), 1.0, size=(n_per_blob, 2))
    b = rng.normal((100.0, 100.0), 1.0, size=(n_per_blob, 2))
    return a, b


class TestNullForce(unittest.TestCase):
    """Constant-velocity prediction and generalized errors."""

    def test_single_step(self):
        x = GeneralizedSample(value=(0.0, 0.0), derivative=(1.0, 0.0))
        predicted = null_force_predict(x, dt=1.0)
        np.testing.assert_array_equal(predicted.value, [1.0, 0.0])
        np.testing.assert_array_equal(predicted.derivative, [1.0, 0.0])

    def test_static_state(self):
        x = GeneralizedSample(value=(3.0, -2.0), derivative=(0.0, 0.0))
        np.testing.assert_array_equal(null_force_predict(x, dt=0.1).value, [3.0, -2.0])

    def test_two_steps_equal_one_double_step(self):
        x = GeneralizedSample(value=(1.0, 2.0), derivative=(0.5, -0.25))
        twice = null_force_predict(null_force_predict(x, dt=0.5), dt=0.5)
        once = null_force_predict(x, dt=1.0)
        np.testing.assert_allclose(twice.vector, once.vector)

    def test_generalized_error(self):
        observed = GeneralizedSample(value=(2.0, 0.0), derivative=(1.0, 1.0))
        predicted = GeneralizedSample(value=(1.0, 0.0), derivative=(1.0, 1.0))
        error = generalized_error(observed, predicted)
        np.testing.assert_array_equal(error[:2], [1.0, 0.0])
        np.testing.assert_array_equal(generalized_error(observed, observed), np.zeros(4))
        np.testing.assert_array_equal(generalized_error(predicted, observed), -error)

    def test_error_needs_same_modality(self):
        a = GeneralizedSample(value=(0.0, 0.0), derivative=(0.0, 0.0))
        b = GeneralizedSample(value=(0.0, 0.0), derivative=(0.0, 0.0), modality=MODALITY_COMMUNICATION)
        with self.assertRaises(DimensionMismatchError):
            generalized_error(a, b)

    def test_constant_velocity_track_has_no_error(self):
        """A straight constant-speed track gives zero null-force error at every step."""
        dt = 0.1
        t = np.arange(40)[:, None]
        positions = np.stack([
            np.hstack([5.0 + 12.0 * dt * t, 1.0 + 0.5 * dt * t]),
            np.hstack([-8.0 + 12.0 * dt * t, 4.7 + 0.0 * t]),
        ], axis=1)
        scenario = Scenario.from_positions(positions, dt=dt)

        stats = null_force_statistics(positional_samples(scenario, platoon_frame=False), dt)
        np.testing.assert_allclose(stats["rms"], np.zeros(4), atol=1e-9)

    def test_value_and_derivative_dimensions_must_match(self):
        with self.assertRaises(DimensionMismatchError):
            GeneralizedSample(value=(0.0, 0.0), derivative=(0.0,))


class TestSamples(unittest.TestCase):
    """Per-modality generalized-state arrays."""

    def test_platoon_frame_is_centred(self):
        positions = np.array([[[0.0, 0.0], [10.0, 2.0]], [[1.0, 0.0], [11.0, 2.0]], [[2.0, 0.0], [12.0, 2.0]]])
        samples = positional_samples(Scenario.from_positions(positions, dt=1.0), platoon_frame=True)
        self.assertEqual(samples.shape, (3, 2, 4))
        np.testing.assert_allclose(samples.sum(axis=1), np.zeros((3, 4)), atol=1e-12)

    def test_communication_samples(self):
        adjacency = np.zeros((3, 2, 2), dtype=np.uint8)
        adjacency[1] = [[0, 1], [1, 0]]
        samples = communication_samples(adjacency)
        self.assertEqual(samples.shape, (3, 2, 4))
        np.testing.assert_array_equal(samples[0, :, 2:], np.zeros((2, 2)))
        np.testing.assert_array_equal(samples[1, 0], [0.0, 1.0, 0.0, 1.0])
        np.testing.assert_array_equal(samples[2, 0], [0.0, 0.0, 0.0, -1.0])

    def test_scaler_keeps_constant_dimensions(self):
        data = np.column_stack([np.arange(10.0), np.full(10, 4.0)])
        scaler = FeatureScaler().fit(data)
        self.assertEqual(scaler.std[1], 1.0)
        normalized = scaler.transform(data)
        np.testing.assert_allclose(normalized[:, 0].mean(), 0.0, atol=1e-12)
        np.testing.assert_allclose(scaler.inverse_transform(normalized), data)


class TestGng(unittest.TestCase):
    """Growing Neural Gas."""

    def test_two_separated_blobs(self):
        """Two nodes settle on the two blob centres."""
        a, b = two_blobs()
        data = np.vstack([a, b])
        nodes = gng_fit(data, {"max_nodes": 2}, seed=1)

        prototypes = sorted((tuple(n.prototype) for n in nodes), key=lambda p: p[0])
        self.assertEqual(len(prototypes), 2)
        np.testing.assert_allclose(prototypes[0], a.mean(axis=0), atol=1.0)
        np.testing.assert_allclose(prototypes[1], b.mean(axis=0), atol=1.0)

    def test_identical_samples(self):
        data = np.tile([[2.5, -1.0]], (60, 1))
        nodes = gng_fit(data, {"max_nodes": 4, "lambda_insert": 10}, seed=0)
        for node in nodes:
            np.testing.assert_array_equal(node.prototype, [2.5, -1.0])

    def test_deterministic(self):
        data = np.vstack(two_blobs(100, seed=5))
        first = gng_fit(data, {"max_nodes": 6, "lambda_insert": 50}, seed=3)
        second = gng_fit(data, {"max_nodes": 6, "lambda_insert": 50}, seed=3)
        self.assertEqual(len(first), len(second))
        for x, y in zip(first, second):
            np.testing.assert_array_equal(x.prototype, y.prototype)
            self.assertEqual(x.edges, y.edges)

    def test_beats_random_prototypes(self):
        """Quantization error below a random sample subset for most seeds."""
        rng = np.random.default_rng(10)
        centres = np.array([[0.0, 0.0], [8.0, 0.0], [0.0, 8.0], [8.0, 8.0], [4.0, 16.0]])
        data = np.vstack([rng.normal(c, 0.8, size=(120, 2)) for c in centres])
        max_nodes = 5

        wins = 0
        for seed in range(10):
            nodes = gng_fit(data, {"max_nodes": max_nodes, "lambda_insert": 60}, seed=seed)
            gng_error = quantization_error(np.array([n.prototype for n in nodes]), data)
            subset = data[np.random.default_rng(100 + seed).choice(len(data), max_nodes, replace=False)]
            wins += gng_error <= quantization_error(subset, data)
        self.assertGreater(wins, 5)

    def test_too_few_samples(self):
        with self.assertRaises(InsufficientDataError):
            gng_fit(np.zeros((3, 2)), {"max_nodes": 5})

    def test_max_nodes_below_two(self):
        with self.assertRaises(ParameterError):
            gng_fit(np.zeros((10, 2)), {"max_nodes": 1})


class TestExtractLetters(unittest.TestCase):
    """Gaussian letters from GNG nodes."""

    def test_single_node(self):
        data = np.random.default_rng(0).normal(size=(50, 3))
        letters = extract_letters([GngNode(prototype=np.zeros(3))], data)
        self.assertEqual(len(letters), 1)
        np.testing.assert_allclose(letters[0].mean, data.mean(axis=0))
        self.assertEqual(letters[0].member_count, 50)

    def test_separated_blobs_give_blob_means(self):
        a, b = two_blobs(80, seed=2)
        nodes = [GngNode(prototype=np.array([0.0, 0.0])), GngNode(prototype=np.array([100.0, 100.0]))]
        letters = extract_letters(nodes, np.vstack([a, b]))
        np.testing.assert_allclose(letters[0].mean, a.mean(axis=0), atol=1e-9)
        np.testing.assert_allclose(letters[1].mean, b.mean(axis=0), atol=1e-9)
        self.assertEqual(sum(letter.member_count for letter in letters), 160)

    def test_singleton_cluster_is_regularized(self):
        data = np.vstack([np.random.default_rng(1).normal(size=(20, 2)), [[100.0, 100.0]]])
        nodes = [GngNode(prototype=np.array([0.0, 0.0])), GngNode(prototype=np.array([100.0, 100.0]))]
        letters = extract_letters(nodes, data)
        np.testing.assert_allclose(letters[1].covariance, COVARIANCE_REGULARIZATION * np.eye(2))

    def test_covariances_are_psd(self):
        data = np.vstack(two_blobs(60, seed=4))
        letters = extract_letters(gng_fit(data, {"max_nodes": 4, "lambda_insert": 20}, seed=0), data)
        for letter in letters:
            np.testing.assert_allclose(letter.covariance, letter.covariance.T)
            self.assertTrue(np.all(np.linalg.eigvalsh(letter.covariance) >= 0.0))

    def test_empty_clusters_dropped(self):
        data = np.zeros((10, 2))
        nodes = [GngNode(prototype=np.zeros(2)), GngNode(prototype=np.array([50.0, 50.0]))]
        letters = extract_letters(nodes, data)
        self.assertEqual([letter.id for letter in letters], [0])


if __name__ == '__main__':
    unittest.main()
