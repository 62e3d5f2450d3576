# tests/test_immjpf.py
import os
import sys
import unittest

import numpy as np

# Add root directory to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from constants import EDGE_PROBABILITY_FLOOR, MODEL_FORMAT_VERSION, PROBABILITY_FLOOR
from core.errdyn import FeatureScaler, Letter
from core.exceptions import DimensionMismatchError, FilterStateError, ParameterError, StreamAlignmentError
from core.immjpf import (
    FilterConfig,
    FrameObservation,
    edge_probabilities,
    graph_log_likelihood,
    init_filter,
    kalman_predict,
    kalman_update,
    lookup_word,
    predict_step,
    run_sequence,
    snapshot_to_dict,
    systematic_resample,
    update_step,
    word_edge_signatures
)
from core.radio import ConnectivityGraph
from core.vocabulary import Dictionary, InteractionMatrix, ModelBundle, TransitionMatrix, Word


def single_vehicle_model(letter_x, word_counts, phi=None, comm_counts=None, smoothing=1e-3):
    """
    One-vehicle model whose positional letters are also its words.

    letter_x: x coordinate of every positional letter (y and velocity 0)
    word_counts: positional word transition counts
    phi: interaction probabilities (default: a single communication word)
    comm_counts: communication word transition counts
    """
    n_letters = len(letter_x)
    letters = [
        Letter(id=k, mean=[x, 0.0, 0.0, 0.0], covariance=np.eye(4), modality="positional", member_count=10)
        for k, x in enumerate(letter_x)
    ]
    positional = Dictionary(
        modality="positional",
        letters=letters,
        words=[Word(k, (k,), "positional") for k in range(n_letters)],
        scaler=FeatureScaler(mean=np.zeros(4), std=np.ones(4))
    )

    if phi is None:
        phi = np.ones((n_letters, 1))
    phi = np.asarray(phi, dtype=float)
    n_comm = phi.shape[1]
    if comm_counts is None:
        comm_counts = np.eye(n_comm, dtype=np.int64)
    communication = Dictionary(
        modality="communication",
        letters=[
            Letter(id=k, mean=[float(k), 0.0], covariance=np.eye(2), modality="communication", member_count=10)
            for k in range(n_comm)
        ],
        words=[Word(k, (k,), "communication") for k in range(n_comm)],
        scaler=FeatureScaler(mean=np.zeros(2), std=np.ones(2)),
        word_adjacency=[np.zeros((1, 1), dtype=np.uint8) for _ in range(n_comm)]
    )

    word_tm = TransitionMatrix.from_counts(np.asarray(word_counts), 0.0)
    return ModelBundle(
        version=MODEL_FORMAT_VERSION,
        fingerprint="fixture",
        config={"vocabulary": {"smoothing": smoothing}},
        dt=1.0,
        n_vehicles=1,
        platoon_frame=False,
        dictionaries={"positional": positional, "communication": communication},
        word_transitions={"positional": word_tm, "communication": TransitionMatrix.from_counts(comm_counts, 0.0)},
        letter_transitions={"positional": word_tm, "communication": TransitionMatrix.from_counts(comm_counts, 0.0)},
        interaction=InteractionMatrix(rows=n_letters, cols=n_comm, counts=np.zeros(phi.shape, dtype=np.int64),
                                      probs=phi)
    )


def observation(frame, x, y=0.0):
    return FrameObservation(frame=frame, positions=np.array([[x, y]]), graph=None)


class TestKalman(unittest.TestCase):
    """Kalman building blocks."""

    def test_null_force_predict(self):
        mean, cov = kalman_predict(np.array([0.0, 0.0, 1.0, 2.0]), np.eye(4), dt=0.5)
        np.testing.assert_allclose(mean, [0.5, 1.0, 1.0, 2.0])
        np.testing.assert_allclose(cov, cov.T)

    def test_control_moves_velocity(self):
        mean, _ = kalman_predict(np.zeros(4), np.eye(4), dt=1.0, control=np.array([1.0, 0.0]))
        np.testing.assert_allclose(mean, [1.0, 0.0, 1.0, 0.0])

    def test_update_pulls_towards_measurement(self):
        mean, cov = kalman_update(np.zeros(4), 100.0 * np.eye(4), np.array([10.0, 0.0]), 0.25 * np.eye(2))
        self.assertGreater(mean[0], 9.9)
        self.assertLess(cov[0, 0], 0.25)
        self.assertGreaterEqual(np.linalg.eigvalsh(cov).min(), -1e-9)

    def test_systematic_resample_follows_weights(self):
        idx = systematic_resample(np.array([0.0, 1.0, 0.0]), np.random.default_rng(0))
        np.testing.assert_array_equal(idx, [1, 1, 1])

    def test_lookup_word(self):
        table = np.array([[0, 1], [1, 1]])
        self.assertEqual(lookup_word(table, np.array([1, 1])), 1)
        self.assertEqual(lookup_word(table, np.array([1, 0])), 2)


class TestInitFilter(unittest.TestCase):
    """Filter initialisation."""

    def test_uniform_weights(self):
        model = single_vehicle_model([0.0, 5.0], [[5, 5], [5, 5]])
        state = init_filter(model, 100, seed=0)
        self.assertEqual(state.n_particles, 100)
        np.testing.assert_allclose(state.weights, np.full(100, 0.01))
        self.assertEqual(len(state.particles()), 100)

    def test_single_word_particles_identical(self):
        model = single_vehicle_model([0.0], [[3]])
        state = init_filter(model, 20, seed=1)
        self.assertEqual(len({p.pos_word for p in state.particles()}), 1)

    def test_same_seed_same_particles(self):
        model = single_vehicle_model([0.0, 5.0, 9.0], np.ones((3, 3)))
        a = init_filter(model, 50, seed=7)
        b = init_filter(model, 50, seed=7)
        np.testing.assert_array_equal(a.pos_word, b.pos_word)

    def test_invalid_particle_count(self):
        model = single_vehicle_model([0.0], [[3]])
        with self.assertRaises(ParameterError):
            init_filter(model, 0, seed=0)

    def test_config_validation(self):
        with self.assertRaises(ParameterError):
            FilterConfig(measurement_noise_m=0.0)
        config = FilterConfig.from_dict({"n_particles": 10, "unknown_key": 1})
        self.assertEqual(config.n_particles, 10)


class TestPredictStep(unittest.TestCase):
    """Top-down predictions."""

    def test_deterministic_word_chain(self):
        """Particles all at word 0 of a 0->1->2 cycle predict word 1."""
        model = single_vehicle_model([0.0, 10.0, 20.0], [[0, 4, 0], [0, 0, 4], [4, 0, 0]])
        state = init_filter(model, 50, seed=0)
        state.pos_word[:] = 0

        snapshot = predict_step(state)

        self.assertEqual(int(np.argmax(snapshot.pi_word_pos)), 1)
        self.assertGreater(snapshot.pi_word_pos[1], 0.99)
        self.assertAlmostEqual(float(snapshot.pi_word_pos.sum()), 1.0, places=9)
        self.assertTrue(np.all(state.pos_word == 1))

    def test_one_hot_coupling(self):
        """A one-hot interaction row makes the communication prediction one-hot."""
        model = single_vehicle_model(
            [0.0, 10.0, 20.0], [[0, 4, 0], [0, 0, 4], [4, 0, 0]],
            phi=[[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]
        )
        state = init_filter(model, 50, seed=0)
        state.pos_word[:] = 0

        snapshot = predict_step(state)

        self.assertEqual(int(np.argmax(snapshot.pi_word_comm)), 0)
        self.assertGreater(snapshot.pi_word_comm[0], 0.99)
        self.assertEqual(snapshot.predicted_graph.n, 1)


class TestUpdateStep(unittest.TestCase):
    """Bottom-up updates."""

    def test_single_letter_keeps_weights(self):
        """With one letter every particle has the same likelihood; no resampling happens."""
        model = single_vehicle_model([0.0], [[3]])
        state = init_filter(model, 40, seed=0)
        predict_step(state)
        words_before = state.pos_word.copy()

        snapshot = update_step(state, observation(0, 0.0))

        np.testing.assert_allclose(state.weights, np.full(40, 1 / 40))
        self.assertFalse(snapshot.resampled)
        np.testing.assert_array_equal(state.pos_word, words_before)
        self.assertAlmostEqual(snapshot.ess, 40.0)

    def test_far_letters_are_resolved(self):
        """Observation at the letter-0 mean puts > 0.99 of the letter mass on letter 0."""
        model = single_vehicle_model([0.0, 50.0], [[5, 5], [5, 5]])
        state = init_filter(model, 100, seed=0)
        predict_step(state)

        snapshot = update_step(state, observation(0, 0.0))

        self.assertGreater(snapshot.posterior_letters[0, 0], 0.99)
        self.assertGreater(snapshot.posterior_word_pos[0], 0.99)
        self.assertEqual(snapshot.observed_word_pos, 0)

    def test_vanishing_weights_are_reset(self):
        model = single_vehicle_model([0.0, 1e4], [[1, 0], [0, 1]])
        state = init_filter(model, 30, seed=0)
        state.pos_word[:] = 1
        predict_step(state)

        snapshot = update_step(state, observation(0, 0.0))

        self.assertTrue(snapshot.weights_reset)
        np.testing.assert_allclose(state.weights, np.full(30, 1 / 30))

    def test_dimension_mismatch(self):
        model = single_vehicle_model([0.0], [[3]])
        state = init_filter(model, 10, seed=0)
        predict_step(state)
        with self.assertRaises(DimensionMismatchError):
            update_step(state, FrameObservation(frame=0, positions=np.zeros((2, 2))))

    def test_frame_mismatch(self):
        model = single_vehicle_model([0.0], [[3]])
        state = init_filter(model, 10, seed=0)
        predict_step(state)
        with self.assertRaises(StreamAlignmentError):
            update_step(state, observation(5, 0.0))

    def test_graph_observation_gives_communication_lambda(self):
        model = single_vehicle_model([0.0], [[3]], phi=[[0.5, 0.5]])
        state = init_filter(model, 10, seed=0)
        predict_step(state)
        graph = ConnectivityGraph(n=1, adjacency=np.zeros((1, 1)))

        snapshot = update_step(state, FrameObservation(frame=0, positions=np.zeros((1, 2)), graph=graph))

        self.assertEqual(snapshot.lambda_word_comm.shape, (3,))
        self.assertAlmostEqual(float(snapshot.lambda_word_comm.sum()), 1.0, places=9)
        # features (0, 0) sit on communication letter 0
        self.assertEqual(snapshot.observed_word_comm, 0)

    def test_communication_belief_is_the_posterior(self):
        model = single_vehicle_model([0.0], [[3]], phi=[[0.5, 0.5]])
        state = init_filter(model, 10, seed=0)
        predict_step(state)
        graph = ConnectivityGraph(n=1, adjacency=np.zeros((1, 1)))

        snapshot = update_step(state, FrameObservation(frame=0, positions=np.zeros((1, 2)), graph=graph))

        np.testing.assert_allclose(state.comm_belief, snapshot.posterior_word_comm)
        self.assertGreater(snapshot.posterior_word_comm[0], snapshot.posterior_word_comm[1])
        # the frame decodes inside the dictionary
        self.assertEqual(snapshot.lambda_word_comm[-1], 0.0)

    def test_communication_prediction_has_floor_unknown(self):
        model = single_vehicle_model([0.0], [[3]], phi=[[0.5, 0.5]])
        snapshot = predict_step(init_filter(model, 10, seed=0))
        self.assertLessEqual(snapshot.pi_word_comm[-1], 2 * PROBABILITY_FLOOR)

    def test_broken_weights_are_reported(self):
        model = single_vehicle_model([0.0, 5.0], [[5, 5], [5, 5]])
        state = init_filter(model, 10, seed=0)
        state.weights[3] = np.nan
        with self.assertRaises(FilterStateError):
            predict_step(state)


class TestGeometry(unittest.TestCase):
    """Communication words against the predicted vehicle positions."""

    def test_edge_probabilities(self):
        means = np.array([[0.0, 0.0, 0, 0], [8.0, 0.0, 0, 0], [0.0, 10.0, 0, 0]])
        covariances = np.repeat(0.01 * np.eye(4)[None], 3, axis=0)
        probs = edge_probabilities(means, covariances, d_k=10.0)
        # pairs (0, 1), (0, 2), (1, 2)
        self.assertGreater(probs[0], 0.999)
        self.assertAlmostEqual(probs[1], 0.5)
        self.assertLess(probs[2], 1e-3)

    def test_wider_covariance_softens_edges(self):
        means = np.array([[0.0, 0.0, 0, 0], [9.0, 0.0, 0, 0]])
        tight = edge_probabilities(means, np.repeat(0.01 * np.eye(4)[None], 2, axis=0), d_k=10.0)
        loose = edge_probabilities(means, np.repeat(4.0 * np.eye(4)[None], 2, axis=0), d_k=10.0)
        self.assertGreater(tight[0], loose[0])
        self.assertGreater(loose[0], 0.5)

    def test_word_edge_signatures(self):
        # letters are [adjacency row, row change] of two vehicles
        letter_means = np.array([
            [0.0, 1.0, 0.0, 1.0],
            [1.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ])
        edges, changes = word_edge_signatures(letter_means, np.array([[0, 1], [2, 2]]), n=2)
        np.testing.assert_array_equal(edges, [[1], [0]])
        np.testing.assert_array_equal(changes, [[1], [0]])

    def test_graph_log_likelihood(self):
        edges = np.array([[1], [0]], dtype=np.int8)
        changes = np.zeros((2, 1), dtype=np.int8)
        log_lik = graph_log_likelihood(np.array([0.9]), edges, changes)
        np.testing.assert_allclose(log_lik, np.log([0.9, 0.1]))

        # edge present before: losing it is a change of -1
        log_lik = graph_log_likelihood(np.array([0.9]), edges, changes, previous=np.array([1]))
        np.testing.assert_allclose(log_lik, [np.log(0.9), np.log(0.1) + np.log(EDGE_PROBABILITY_FLOOR)])

    def test_certain_edges_are_floored(self):
        log_lik = graph_log_likelihood(np.array([1.0]), np.array([[0]], dtype=np.int8), np.zeros((1, 1), dtype=np.int8))
        self.assertAlmostEqual(float(log_lik[0]), np.log(EDGE_PROBABILITY_FLOOR))


class TestRunSequence(unittest.TestCase):
    """Whole-stream filtering."""

    def setUp(self):
        self.transition = np.array([[0.9, 0.1], [0.2, 0.8]])
        self.model = single_vehicle_model([0.0, 3.0], [[90, 10], [20, 80]])
        rng = np.random.default_rng(12)
        state, xs = 0, []
        for _ in range(30):
            state = int(rng.random() < self.transition[state, 1])
            xs.append((0.0, 3.0)[state] + rng.normal(0.0, 1.0))
        self.positions = np.array(xs).reshape(-1, 1, 1) * np.array([1.0, 0.0])

    def test_matches_exact_forward_recursion(self):
        """Posteriors stay within total variation 0.05 of the exact HMM filter."""
        snapshots = run_sequence(self.model, self.positions, [None] * len(self.positions), 10000, seed=3)

        alpha = np.full(2, 0.5)
        for snapshot in snapshots:
            emission = snapshot.lambda_letters[0]
            alpha = (alpha @ self.transition) * emission
            alpha /= alpha.sum()
            tv = 0.5 * np.abs(snapshot.posterior_word_pos - alpha).sum()
            self.assertLessEqual(tv, 0.05, f"frame {snapshot.frame}")

    def test_messages_stay_normalized(self):
        snapshots = run_sequence(self.model, self.positions, [None] * len(self.positions), 200, seed=0)
        self.assertEqual(len(snapshots), len(self.positions))
        for snapshot in snapshots:
            for vector in (snapshot.pi_word_pos, snapshot.lambda_word_pos, snapshot.pi_word_comm,
                           snapshot.lambda_word_comm, snapshot.posterior_word_pos):
                self.assertAlmostEqual(float(vector.sum()), 1.0, places=9)
                self.assertTrue(np.all(vector >= 0))
            np.testing.assert_allclose(snapshot.pi_letters.sum(axis=1), 1.0, atol=1e-9)
            for track in snapshot.tracks:
                np.testing.assert_allclose(track.covariance, track.covariance.T)
                self.assertGreaterEqual(np.linalg.eigvalsh(track.covariance).min(), -1e-9)
            graph = snapshot.predicted_graph.adjacency
            self.assertTrue(np.array_equal(graph, graph.T))

    def test_deterministic(self):
        a = run_sequence(self.model, self.positions, [None] * len(self.positions), 100, seed=5)
        b = run_sequence(self.model, self.positions, [None] * len(self.positions), 100, seed=5)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.posterior_word_pos, y.posterior_word_pos)
            self.assertEqual(snapshot_to_dict(x), snapshot_to_dict(y))

    def test_empty_stream(self):
        self.assertEqual(run_sequence(self.model, np.zeros((0, 1, 2)), [], 10, seed=0), [])

    def test_length_mismatch(self):
        with self.assertRaises(StreamAlignmentError):
            run_sequence(self.model, self.positions, [None] * 3, 10, seed=0)

    def test_vehicle_count_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            run_sequence(self.model, np.zeros((4, 2, 2)), [None] * 4, 10, seed=0)

    def test_snapshot_serialization_is_sparse(self):
        snapshot = run_sequence(self.model, self.positions[:2], [None, None], 50, seed=0)[0]
        data = snapshot_to_dict(snapshot)
        self.assertEqual(data["pi_word_pos"]["size"], 3)
        self.assertTrue(all(p >= 1e-6 for p in data["pi_word_pos"]["support"].values()))
        self.assertIsNone(data["observed_word_comm"])


if __name__ == '__main__':
    unittest.main()
