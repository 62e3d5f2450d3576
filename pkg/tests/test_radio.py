# tests/test_radio.py
import os
import sys
import unittest

import numpy as np

# Add root directory to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from constants import DEFAULT_JAMMER, JAMMER_MODE_SINGLE
from core.exceptions import ChannelDomainError, ParameterError
from core.radio import (
    ChannelParams,
    ConnectivityGraph,
    JammerConfig,
    attack_truth,
    channel_gain,
    observe_graph,
    pathloss_db,
    jammer_from_config,
    periodic_windows,
    perturb_graph,
    received_under_hypothesis,
    roadside_track,
    simulate_graph_streams
)
from core.scenario import VehicleState, synthesize_freeway


def states(points, timestamp=0):
    return tuple(
        VehicleState(vehicle_id=i, position=tuple(p), velocity=(0.0, 0.0), timestamp=timestamp)
        for i, p in enumerate(points)
    )


class TestPathLoss(unittest.TestCase):
    """Macro-cell path loss."""

    def setUp(self):
        self.params = ChannelParams()

    def test_one_kilometre(self):
        self.assertAlmostEqual(pathloss_db(1.0, self.params), 128.1, places=9)

    def test_hundred_metres(self):
        self.assertAlmostEqual(pathloss_db(0.1, self.params), 90.5, places=9)

    def test_zero_distance_rejected(self):
        with self.assertRaises(ChannelDomainError):
            pathloss_db(0.0, self.params)
        with self.assertRaises(ChannelDomainError):
            pathloss_db(-1.0, self.params)


class TestChannelGain(unittest.TestCase):
    """Link gains with and without the random terms."""

    def test_deterministic_gain_at_one_kilometre(self):
        """Without shadowing and fading the gain is antenna gains minus path loss."""
        params = ChannelParams().deterministic()
        gain = channel_gain((0.0, 0.0), (1000.0, 0.0), params, np.random.default_rng(0))
        expected = 10.0 ** (-128.1 / 10.0 + params.v2v_antenna_gain_db / 10.0)
        self.assertAlmostEqual(gain / expected, 1.0, places=9)

    def test_same_seed_same_gain(self):
        params = ChannelParams()
        a = channel_gain((0.0, 0.0), (120.0, 35.0), params, np.random.default_rng(11))
        b = channel_gain((0.0, 0.0), (120.0, 35.0), params, np.random.default_rng(11))
        self.assertEqual(a, b)
        self.assertGreater(a, 0.0)

    def test_shadowing_is_zero_mean_in_db(self):
        """The shadowing exponent averages to 0 dB within three standard errors."""
        params = ChannelParams(enable_fading=False)
        rng = np.random.default_rng(2024)
        n = 20000
        base_db = params.v2v_antenna_gain_db - pathloss_db(0.2, params)
        draws = np.array([
            10.0 * np.log10(channel_gain((0.0, 0.0), (200.0, 0.0), params, rng)) - base_db
            for _ in range(n)
        ])
        self.assertLess(abs(draws.mean()), 3.0 * params.shadow_sigma_db / np.sqrt(n))

    def test_coincident_positions_rejected(self):
        params = ChannelParams().deterministic()
        with self.assertRaises(ChannelDomainError):
            channel_gain((5.0, 5.0), (5.0, 5.0), params, np.random.default_rng(0))


class TestReceivedUnderHypothesis(unittest.TestCase):
    """Signal, interference and noise at a link receiver."""

    def setUp(self):
        self.params = ChannelParams().deterministic()
        self.link = states([(0.0, 0.0), (50.0, 0.0)])
        self.jammer = JammerConfig(position=(55.0, 0.0), power_dbm=self.params.tx_power_dbm,
                                   attack_windows=((10, 20),), mode=JAMMER_MODE_SINGLE)

    def test_no_jammer(self):
        signal, interference, noise = received_under_hypothesis(
            self.link, None, 15, self.params, np.random.default_rng(0))
        self.assertGreater(signal, 0.0)
        self.assertEqual(interference, 0.0)
        self.assertAlmostEqual(noise, self.params.noise_power_w)

    def test_outside_attack_window(self):
        _, interference, _ = received_under_hypothesis(
            self.link, self.jammer, 5, self.params, np.random.default_rng(0))
        self.assertEqual(interference, 0.0)

    def test_close_jammer_dominates(self):
        """A jammer 5 m from the receiver beats a transmitter 50 m away at equal power."""
        signal, interference, _ = received_under_hypothesis(
            self.link, self.jammer, 15, self.params, np.random.default_rng(0))
        self.assertGreater(interference, signal)


class TestObserveGraph(unittest.TestCase):
    """Distance-thresholded connectivity."""

    def test_distance_equal_to_threshold_is_connected(self):
        g = observe_graph(states([(0.0, 0.0), (10.0, 0.0)]), d_k=10.0)
        self.assertEqual(g.edges(), [(0, 1)])

    def test_far_apart_gives_empty_graph(self):
        g = observe_graph(states([(0.0, 0.0), (20.0, 0.0), (0.0, 30.0)]), d_k=10.0)
        self.assertEqual(g.edge_count, 0)

    def test_collinear_path_graph(self):
        """Vehicles at 0, 8, 16 m form the path 0-1-2 without a 0-2 edge."""
        g = observe_graph(states([(0.0, 0.0), (8.0, 0.0), (16.0, 0.0)]), d_k=10.0)
        self.assertEqual(g.edges(), [(0, 1), (1, 2)])
        self.assertTrue(np.array_equal(g.adjacency, g.adjacency.T))
        self.assertFalse(np.any(np.diag(g.adjacency)))

    def test_invariant_under_rigid_motion(self):
        """Translating and rotating all positions leaves the graph unchanged."""
        rng = np.random.default_rng(3)
        points = rng.uniform(-15.0, 15.0, size=(6, 2))
        angle = 0.7
        rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        moved = points @ rotation.T + np.array([250.0, -40.0])

        a = observe_graph(states(points), d_k=10.0)
        b = observe_graph(states(moved), d_k=10.0)
        self.assertTrue(np.array_equal(a.adjacency, b.adjacency))

    def test_asymmetric_adjacency_rejected(self):
        with self.assertRaises(ParameterError):
            ConnectivityGraph(n=2, adjacency=np.array([[0, 1], [0, 0]]))


class TestPerturbGraph(unittest.TestCase):
    """Jammer perturbation of the observed graph."""

    def setUp(self):
        self.params = ChannelParams().deterministic()
        self.frame = states([(0.0, 0.0), (8.0, 0.0), (16.0, 0.0), (16.0, 8.0)])
        self.graph = observe_graph(self.frame, d_k=10.0)

    def jammer(self, position, power_dbm=23.0, windows=((0, 10),)):
        return JammerConfig(position=position, power_dbm=power_dbm, attack_windows=windows,
                            mode=JAMMER_MODE_SINGLE)

    def test_outside_window_unchanged(self):
        out = perturb_graph(self.graph, self.frame, self.jammer((8.0, 0.0), windows=((50, 60),)),
                            5, self.params, np.random.default_rng(0))
        self.assertEqual(out, self.graph)

    def test_colocated_jammer_drops_incident_edges(self):
        """A jammer on top of vehicle 0 at the transmit power cuts every link of vehicle 0."""
        out = perturb_graph(self.graph, self.frame, self.jammer((0.0, 0.0), power_dbm=self.params.tx_power_dbm),
                            3, self.params, np.random.default_rng(0))
        self.assertEqual(out.adjacency[0].sum(), 0)
        self.assertTrue(set(out.edges()) <= set(self.graph.edges()))

    def test_empty_graph_stays_empty(self):
        empty = ConnectivityGraph.empty(4)
        out = perturb_graph(empty, self.frame, self.jammer((0.0, 0.0)), 3, self.params, np.random.default_rng(0))
        self.assertEqual(out.edge_count, 0)

    def test_more_power_never_adds_edges(self):
        previous = set(self.graph.edges())
        for power in (-40.0, -10.0, 10.0, 23.0, 40.0, 80.0):
            out = perturb_graph(self.graph, self.frame, self.jammer((12.0, -6.0), power_dbm=power),
                                3, self.params, np.random.default_rng(0))
            edges = set(out.edges())
            self.assertTrue(edges <= previous, f"power {power} dBm added edges")
            previous = edges


class TestJammerConfig(unittest.TestCase):
    """Jammer parameter checks and attack windows."""

    def test_overlapping_windows_rejected(self):
        with self.assertRaises(ParameterError):
            JammerConfig(position=(0.0, 0.0), attack_windows=((0, 10), (5, 15)))

    def test_single_mode_needs_one_window(self):
        with self.assertRaises(ParameterError):
            JammerConfig(position=(0.0, 0.0), attack_windows=((0, 10), (20, 30)), mode=JAMMER_MODE_SINGLE)

    def test_periodic_windows(self):
        self.assertEqual(periodic_windows(10, 5, 20, 3), [(10, 15), (30, 35), (50, 55)])
        with self.assertRaises(ParameterError):
            periodic_windows(0, 10, 5, 2)

    def test_attack_truth(self):
        jammer = JammerConfig(position=(0.0, 0.0), attack_windows=((2, 4), (7, 9)))
        truth = attack_truth(jammer, 10)
        self.assertEqual(np.flatnonzero(truth).tolist(), [2, 3, 7, 8])
        self.assertFalse(attack_truth(None, 10).any())

    def test_track_overrides_fixed_position(self):
        jammer = JammerConfig(position=(0.0, 0.0), attack_windows=((0, 2),), track=((1.0, -2.0), (2.0, -2.0)))
        self.assertEqual(jammer.position_at(1), (2.0, -2.0))
        # frames past the track fall back to the fixed site
        self.assertEqual(jammer.position_at(5), (0.0, 0.0))


class TestRoadsideJammer(unittest.TestCase):
    """Default jammer placement beside the platoon."""

    def setUp(self):
        self.scenario = synthesize_freeway(4, 2000, 3, seed=0)
        self.channel = ChannelParams()

    def test_track_keeps_level_with_the_platoon(self):
        track = np.array(roadside_track(self.scenario, 2.0))
        self.assertEqual(track.shape, (2000, 2))
        np.testing.assert_allclose(track[:, 0], self.scenario.positions[:, :, 0].mean(axis=1))
        self.assertTrue(np.all(track[:, 1] == self.scenario.positions[:, :, 1].min() - 2.0))

    def test_default_jammer_is_close_in_every_window(self):
        jammer = jammer_from_config(dict(DEFAULT_JAMMER), self.scenario, self.channel)
        self.assertIsNotNone(jammer.track)
        for start, end in jammer.attack_windows:
            for t in range(start, end):
                gaps = np.hypot(*(self.scenario.positions[t] - np.array(jammer.position_at(t))).T)
                self.assertLess(gaps.min(), 20.0, f"frame {t}")

    def test_explicit_position_is_fixed(self):
        section = dict(DEFAULT_JAMMER, position=[5.0, -10.0])
        jammer = jammer_from_config(section, self.scenario, self.channel)
        self.assertIsNone(jammer.track)
        self.assertEqual(jammer.position_at(650), (5.0, -10.0))
        self.assertEqual(jammer.position_at(1450), (5.0, -10.0))


class TestGraphStreams(unittest.TestCase):
    """Clean and jammed streams of a whole scenario."""

    def setUp(self):
        self.scenario = synthesize_freeway(4, 80, 2, seed=9)
        self.params = ChannelParams()

    def test_no_jammer_streams_match_observed_graphs(self):
        clean, jammed = simulate_graph_streams(self.scenario, None, self.params, d_k=10.0, seed=1)
        self.assertEqual(len(clean), self.scenario.n_frames)
        for t, (c, j) in enumerate(zip(clean, jammed)):
            expected = observe_graph(self.scenario.frame(t), 10.0)
            self.assertEqual(c.graph, expected)
            self.assertEqual(j.graph, expected)
            self.assertFalse(j.attack)

    def test_jammed_stream_is_subset_and_labelled(self):
        centre = tuple(self.scenario.positions[40].mean(axis=0))
        jammer = JammerConfig(position=centre, power_dbm=60.0, attack_windows=((30, 50),),
                              mode=JAMMER_MODE_SINGLE)
        clean, jammed = simulate_graph_streams(self.scenario, jammer, self.params, d_k=10.0, seed=1)

        self.assertEqual([r.frame for r in jammed if r.attack], list(range(30, 50)))
        for c, j in zip(clean, jammed):
            self.assertTrue(set(j.graph.edges()) <= set(c.graph.edges()))
            if not j.attack:
                self.assertEqual(c.graph, j.graph)
            self.assertEqual(len(j.v2i_sinr_db), self.scenario.n_vehicles)

    def test_same_seed_same_streams(self):
        jammer = JammerConfig(position=(0.0, -6.0), attack_windows=((10, 20),), mode=JAMMER_MODE_SINGLE)
        _, a = simulate_graph_streams(self.scenario, jammer, self.params, d_k=10.0, seed=4)
        _, b = simulate_graph_streams(self.scenario, jammer, self.params, d_k=10.0, seed=4)
        self.assertEqual([r.graph for r in a], [r.graph for r in b])
        self.assertEqual([r.v2i_sinr_db for r in a], [r.v2i_sinr_db for r in b])

    def test_negative_range_rejected(self):
        with self.assertRaises(ParameterError):
            simulate_graph_streams(self.scenario, None, self.params, d_k=-1.0, seed=0)


if __name__ == '__main__':
    unittest.main()
