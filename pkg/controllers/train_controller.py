# controllers/train_controller.py
"""
Controller for the train command.

Learns the positional and communication vocabularies of an attack-free run,
their transition matrices and the interaction matrix, then calibrates the
detection thresholds on the run's own abnormality trace.
"""

from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from constants import (
    CLEAN_GRAPHS_FILE_NAME,
    MIN_TRAJECTORY_FRAMES,
    MODALITIES,
    MODALITY_COMMUNICATION,
    MODALITY_POSITIONAL,
    MODEL_FILE_NAME,
    MODEL_FORMAT_VERSION,
    SCENARIO_FILE_NAME
)
from core.errdyn import (
    FeatureScaler,
    communication_samples,
    extract_letters,
    gng_fit,
    null_force_statistics,
    positional_samples
)
from core.evalkit import graph_prediction_rate
from core.exceptions import InsufficientDataError, StreamAlignmentError
from core.immjpf import FilterConfig, run_sequence
from core.radio import ConnectivityGraph
from core.scenario import Scenario
from core.sentinel import calibrate_threshold, score_run
from core.vocabulary import (
    Dictionary,
    ModelBundle,
    build_words,
    learn_interaction,
    learn_letter_transitions,
    learn_transitions,
    letterize,
    modal_word_adjacency
)
from exporters.model_exporter import save_model
from importers.stream_importer import load_graph_stream, load_scenario_json
from utils.config import RunConfig
from utils.error_handler import stage
from utils.logger import get_logger

logger = get_logger(__name__)


class TrainController:
    """Training pipeline."""

    @staticmethod
    def learn_modality(samples: np.ndarray, modality: str, gng_config: dict, seed: int,
                       adjacency: Optional[np.ndarray] = None) -> Tuple[Dictionary, np.ndarray, np.ndarray]:
        """
        Letters, words and the word/letter series of one modality.

        Args:
            samples: (T, N, D) generalized states
            modality: positional or communication
            gng_config: GNG section
            seed: GNG seed
            adjacency: (T, N, N) stream; when given, every word keeps the
                modal adjacency seen with it

        Returns:
            (dictionary, word_series (T,), letter_frames (T, N))
        """
        scaler = FeatureScaler().fit(samples)
        normalized = scaler.transform(samples)
        flat = normalized.reshape(-1, normalized.shape[-1])

        nodes = gng_fit(flat, gng_config, seed=seed)
        letters = extract_letters(nodes, flat, modality=modality)
        letter_frames = letterize(normalized, letters)
        words, series = build_words(letter_frames, modality=modality)
        word_adjacency = None if adjacency is None else modal_word_adjacency(series, adjacency, len(words))
        dictionary = Dictionary(modality=modality, letters=letters, words=words, scaler=scaler,
                                word_adjacency=word_adjacency)
        return dictionary, series, letter_frames

    @staticmethod
    def fit_model(scenario: Scenario, graphs: Sequence[ConnectivityGraph], config: RunConfig) -> ModelBundle:
        """
        Learn an uncalibrated model bundle from aligned clean streams.

        Raises:
            InsufficientDataError: Fewer than 3 frames
            StreamAlignmentError: Trajectory and graph streams of different length
        """
        if scenario.n_frames < MIN_TRAJECTORY_FRAMES:
            raise InsufficientDataError(
                f"Se requieren al menos {MIN_TRAJECTORY_FRAMES} frames para entrenar",
                details=f"frames={scenario.n_frames}"
            )
        if len(graphs) != scenario.n_frames:
            raise StreamAlignmentError(
                "El flujo de grafos no está alineado con las trayectorias",
                details=f"{len(graphs)} != {scenario.n_frames}"
            )

        vocabulary = config.section("vocabulary")
        gng_config = config.section("gng")
        smoothing = vocabulary["smoothing"]
        edges = vocabulary["tau_bin_edges"]
        adjacency = np.array([g.adjacency for g in graphs], dtype=np.uint8)

        samples = {
            MODALITY_POSITIONAL: positional_samples(scenario, platoon_frame=vocabulary["platoon_frame"]),
            MODALITY_COMMUNICATION: communication_samples(adjacency),
        }

        dictionaries, word_series, word_transitions, letter_transitions = {}, {}, {}, {}
        for modality in MODALITIES:
            with stage(f"vocabulario {modality}"):
                dictionary, series, letter_frames = TrainController.learn_modality(
                    samples[modality], modality, gng_config, config.seed,
                    adjacency=adjacency if modality == MODALITY_COMMUNICATION else None
                )
                dictionaries[modality] = dictionary
                word_series[modality] = series
                word_transitions[modality] = learn_transitions(series, dictionary.n_words, smoothing, edges)
                letter_transitions[modality] = learn_letter_transitions(
                    letter_frames, dictionary.n_letters, smoothing, edges
                )

        with stage("interacción"):
            interaction = learn_interaction(
                word_series[MODALITY_POSITIONAL],
                word_series[MODALITY_COMMUNICATION],
                (dictionaries[MODALITY_POSITIONAL].n_words, dictionaries[MODALITY_COMMUNICATION].n_words),
                smoothing
            )

        model = ModelBundle(
            version=MODEL_FORMAT_VERSION,
            fingerprint=config.fingerprint(),
            config=config.training_sections(),
            dt=scenario.dt,
            n_vehicles=scenario.n_vehicles,
            platoon_frame=vocabulary["platoon_frame"],
            dictionaries=dictionaries,
            word_transitions=word_transitions,
            letter_transitions=letter_transitions,
            interaction=interaction,
            null_force={m: null_force_statistics(samples[m], scenario.dt) for m in MODALITIES}
        )
        logger.info(
            f"Model fitted: positional {dictionaries[MODALITY_POSITIONAL].n_letters} letters / "
            f"{dictionaries[MODALITY_POSITIONAL].n_words} words, communication "
            f"{dictionaries[MODALITY_COMMUNICATION].n_letters} letters / "
            f"{dictionaries[MODALITY_COMMUNICATION].n_words} words"
        )
        return model

    @staticmethod
    def calibrate(model: ModelBundle, scenario: Scenario, graphs: Sequence[ConnectivityGraph],
                  config: RunConfig) -> Dict[str, dict]:
        """
        Replay the training streams through the filter and set each modality's
        threshold to mean + phi * std of its abnormality trace.
        """
        filter_config = FilterConfig.from_dict(config.section("filter"))
        phi = float(config.section("detection")["phi"])
        snapshots = run_sequence(model, scenario, list(graphs), filter_config.n_particles, config.seed, filter_config)
        logger.info(f"Training replay: graph prediction rate {graph_prediction_rate(snapshots, list(graphs)):.3f}")

        calibration = {}
        for modality in MODALITIES:
            trace = score_run(snapshots, modality, float("inf")).values
            threshold = calibrate_threshold(trace, phi)
            calibration[modality] = {
                "mean": float(trace.mean()),
                "std": float(trace.std(ddof=1)),
                "variance": "unbiased",
                "phi": phi,
                "threshold": threshold,
                "trace": np.round(trace, 6).tolist(),
            }
            logger.info(f"{modality}: threshold {threshold:.4f} (mean {trace.mean():.4f}, phi={phi})")
        return calibration

    @staticmethod
    def train(scenario: Scenario, graphs: Sequence[ConnectivityGraph], config: RunConfig) -> ModelBundle:
        """Fit and calibrate a model bundle."""
        model = TrainController.fit_model(scenario, graphs, config)
        with stage("calibración"):
            model.calibration = TrainController.calibrate(model, scenario, graphs, config)
        return model

    @staticmethod
    def run(config: RunConfig, scenario_path: Optional[str] = None,
            graphs_path: Optional[str] = None, model_path: Optional[str] = None) -> str:
        """
        Execute the train command on the clean streams written by simulate.

        Returns:
            Path of the written model file
        """
        out_dir = config.output_dir
        with stage("carga"):
            scenario = load_scenario_json(scenario_path or str(out_dir / SCENARIO_FILE_NAME))
            records = load_graph_stream(graphs_path or str(out_dir / CLEAN_GRAPHS_FILE_NAME))

        with stage("entrenamiento"):
            model = TrainController.train(scenario, [r.graph for r in records], config)

        with stage("escritura"):
            return save_model(model, model_path or str(out_dir / MODEL_FILE_NAME))
