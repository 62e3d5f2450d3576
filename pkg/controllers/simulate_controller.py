# controllers/simulate_controller.py
"""
Controller for the simulate command: scenario generation or ingestion and
clean/jammed graph streams.
"""

from pathlib import Path
from typing import Dict, Optional

import numpy as np

from constants import (
    CLEAN_GRAPHS_FILE_NAME,
    JAMMED_GRAPHS_FILE_NAME,
    SCENARIO_FILE_NAME,
    TRAJECTORY_FILE_NAME
)
from core.radio import ChannelParams, jammer_from_config, simulate_graph_streams
from core.scenario import Scenario, synthesize_freeway
from exporters.graph_exporter import GraphStreamExporter
from exporters.scenario_exporter import ScenarioExporter
from importers.csv_importer import load_trajectories
from importers.ngsim_importer import convert_ngsim
from utils.config import RunConfig
from utils.error_handler import stage
from utils.logger import get_logger

logger = get_logger(__name__)


class SimulateController:
    """
    Builds the scenario of a run and simulates its V2V graph streams.
    """

    @staticmethod
    def resolve_scenario(config: RunConfig, ngsim_path: Optional[str] = None) -> Scenario:
        """
        Scenario of the run: an NGSIM table (converted first), a trajectory
        CSV named by scenario.source, or a synthetic freeway platoon.
        """
        section = config.section("scenario")
        bs_position = tuple(section["bs_position"]) if section["bs_position"] is not None else None

        if ngsim_path is not None:
            converted = config.output_dir / f"ngsim_{Path(ngsim_path).stem}.csv"
            convert_ngsim(
                ngsim_path,
                str(converted),
                vehicle_ids=section["ngsim_vehicle_ids"],
                frame_range=tuple(section["ngsim_frame_range"]) if section["ngsim_frame_range"] else None,
                use_global=section["ngsim_use_global"]
            )
            return load_trajectories(str(converted), dt=section["dt"], bs_position=bs_position,
                                     source_tag=f"ngsim:{Path(ngsim_path).name}")

        if section["source"]:
            return load_trajectories(section["source"], dt=section["dt"], bs_position=bs_position)

        scenario = synthesize_freeway(
            n_vehicles=section["n_vehicles"],
            n_frames=section["n_frames"],
            lane_count=section["lane_count"],
            seed=section["seed"],
            dt=section["dt"]
        )
        if bs_position is not None:
            scenario = Scenario.from_positions(scenario.positions, dt=scenario.dt, bs_position=bs_position,
                                               source_tag=scenario.source_tag)
        return scenario

    @staticmethod
    def run(config: RunConfig, ngsim_path: Optional[str] = None) -> Dict[str, object]:
        """
        Execute the simulate command.

        Writes under the output directory the trajectory CSV, the scenario
        cache and the clean and jammed graph streams.

        Returns:
            Dictionary with the written paths and simple stream statistics
        """
        out_dir = config.output_dir

        with stage("escenario"):
            scenario = SimulateController.resolve_scenario(config, ngsim_path)

        with stage("canal"):
            channel_section = config.section("channel")
            channel = ChannelParams.from_dict(channel_section)
            jammer = jammer_from_config(config.section("jammer"), scenario, channel)
            clean, jammed = simulate_graph_streams(
                scenario,
                jammer,
                channel,
                d_k=channel_section["d_k"],
                seed=config.seed,
                sinr_threshold_db=channel_section["sinr_threshold_db"]
            )

        with stage("escritura"):
            paths = {
                "trajectories": ScenarioExporter.export_csv(scenario, out_dir / TRAJECTORY_FILE_NAME),
                "scenario": ScenarioExporter.export_json(scenario, out_dir / SCENARIO_FILE_NAME),
                "graphs_clean": GraphStreamExporter.export(clean, out_dir / CLEAN_GRAPHS_FILE_NAME),
                "graphs_jammed": GraphStreamExporter.export(jammed, out_dir / JAMMED_GRAPHS_FILE_NAME),
            }

        attacked = np.array([r.attack for r in jammed], dtype=bool)
        clean_edges = np.array([r.graph.edge_count for r in clean])
        jammed_edges = np.array([r.graph.edge_count for r in jammed])
        in_window = int(clean_edges[attacked].sum())
        drop_fraction = 1.0 - jammed_edges[attacked].sum() / in_window if in_window else 0.0

        logger.info(
            f"Simulation done: N={scenario.n_vehicles}, frames={scenario.n_frames}, "
            f"edges dropped during attacks={drop_fraction:.1%}"
        )
        return {
            "paths": paths,
            "n_vehicles": scenario.n_vehicles,
            "n_frames": scenario.n_frames,
            "attacked_frames": int(attacked.sum()),
            "edge_drop_fraction": float(drop_fraction),
        }
