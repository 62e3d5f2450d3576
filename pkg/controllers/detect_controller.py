# controllers/detect_controller.py
"""
Controller for the detect command.
"""

from typing import Dict, Optional, Tuple

import numpy as np

from constants import (
    EXIT_ABNORMAL,
    EXIT_NORMAL,
    JAMMED_GRAPHS_FILE_NAME,
    MODALITIES,
    MODALITY_COMMUNICATION,
    MODEL_FILE_NAME,
    SCENARIO_FILE_NAME,
    SERIES_FILE_TEMPLATE,
    SNAPSHOTS_FILE_NAME,
    SUMMARY_FILE_NAME
)
from core.evalkit import detection_summary, graph_prediction_rate
from core.exceptions import DimensionMismatchError, StreamAlignmentError
from core.immjpf import FilterConfig, run_sequence
from core.sentinel import AbnormalitySeries, score_run
from exporters.report_exporter import save_series, save_snapshots, save_summary
from importers.model_importer import load_model
from importers.stream_importer import load_graph_stream, load_scenario_json
from utils.config import RunConfig
from utils.error_handler import stage
from utils.logger import get_logger

logger = get_logger(__name__)


class DetectController:
    """
    Runs the filter over a test run and scores both modalities.

    The communication series is the jamming detector and drives the exit
    code; the positional series flags trajectory novelty and is reported.
    """

    @staticmethod
    def exit_code(series: Dict[str, AbnormalitySeries]) -> int:
        return EXIT_ABNORMAL if series[MODALITY_COMMUNICATION].n_abnormal else EXIT_NORMAL

    @staticmethod
    def run(config: RunConfig, model_path: Optional[str] = None, scenario_path: Optional[str] = None,
            graphs_path: Optional[str] = None) -> Tuple[int, dict]:
        """
        Execute the detect command.

        Args:
            config: Run configuration (filter settings and seed)
            model_path: Model file (default: <out>/model.json)
            scenario_path: Test scenario cache (default: <out>/scenario.json)
            graphs_path: Test graph stream (default: <out>/graphs_jammed.jsonl)

        Returns:
            (exit code, summary dictionary)
        """
        out_dir = config.output_dir
        with stage("carga"):
            model = load_model(model_path or str(out_dir / MODEL_FILE_NAME))
            scenario = load_scenario_json(scenario_path or str(out_dir / SCENARIO_FILE_NAME))
            records = load_graph_stream(graphs_path or str(out_dir / JAMMED_GRAPHS_FILE_NAME))

        if model.fingerprint != config.fingerprint():
            logger.warning(
                f"Model fingerprint {model.fingerprint[:12]} differs from the current configuration "
                f"({config.fingerprint()[:12]})"
            )

        with stage("filtrado"):
            if len(records) != scenario.n_frames:
                raise StreamAlignmentError(
                    "El flujo de grafos no está alineado con las trayectorias",
                    details=f"{len(records)} != {scenario.n_frames}"
                )
            if scenario.n_vehicles != model.n_vehicles:
                raise DimensionMismatchError(
                    f"El modelo fue entrenado con {model.n_vehicles} vehículos; el escenario tiene {scenario.n_vehicles}"
                )
            filter_config = FilterConfig.from_dict(config.section("filter"))
            snapshots = run_sequence(
                model, scenario, [r.graph for r in records], filter_config.n_particles, config.seed, filter_config
            )

        truth = np.array([r.attack for r in records], dtype=bool)
        with stage("puntuación"):
            series = {
                modality: score_run(snapshots, modality, model.threshold(modality), attack_truth=truth)
                for modality in MODALITIES
            }

        summary = {
            "model": model.fingerprint,
            "seed": config.seed,
            "frames": scenario.n_frames,
            "weight_resets": int(sum(s.weights_reset for s in snapshots)),
            "graph_prediction_rate": graph_prediction_rate(snapshots, [r.graph for r in records]),
            "modalities": {m: detection_summary(s) for m, s in series.items()},
        }
        code = DetectController.exit_code(series)
        summary["exit_code"] = code

        with stage("escritura"):
            for modality, s in series.items():
                save_series(s, str(out_dir / SERIES_FILE_TEMPLATE.format(modality=modality)))
            save_snapshots(snapshots, str(out_dir / SNAPSHOTS_FILE_NAME))
            save_summary(summary, str(out_dir / SUMMARY_FILE_NAME))

        logger.info(
            f"Detection done: {series[MODALITY_COMMUNICATION].n_abnormal} abnormal communication frames, "
            f"graph prediction rate {summary['graph_prediction_rate']:.3f}, exit code {code}"
        )
        return code, summary
