# importers/stream_importer.py
"""
Readers for the files the pipeline writes between stages: scenario JSON
caches, graph streams (JSON lines) and abnormality series (CSV).
"""

import json
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from constants import MODALITIES
from core.exceptions import ParameterError, TrajectoryFormatError
from core.radio import ConnectivityGraph, GraphRecord
from core.scenario import Scenario
from core.sentinel import AbnormalitySeries
from importers.base_importer import BaseImporter
from utils.logger import get_logger

logger = get_logger(__name__)


class ScenarioJSONImporter(BaseImporter):
    """Scenario JSON cache."""

    SUPPORTED_EXTENSIONS = [".json"]

    @classmethod
    def import_file(cls, filepath: str, **kwargs) -> Scenario:
        path = cls.validate_file(filepath)
        try:
            scenario = Scenario.from_dict(cls.read_json(path))
        except json.JSONDecodeError as e:
            raise TrajectoryFormatError(f"Escenario JSON ilegible: {filepath}", details=str(e))
        except (KeyError, TypeError, ValueError) as e:
            raise TrajectoryFormatError(f"Escenario JSON incompleto: {filepath}", details=repr(e))
        logger.info(f"Loaded scenario {filepath}: N={scenario.n_vehicles}, frames={scenario.n_frames}")
        return scenario


class GraphStreamImporter(BaseImporter):
    """Graph stream, one JSON object per frame."""

    SUPPORTED_EXTENSIONS = [".jsonl", ".json"]

    @classmethod
    def import_file(cls, filepath: str, **kwargs) -> List[GraphRecord]:
        cls.validate_file(filepath)
        records = []
        with open(filepath, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    item = json.loads(line)
                    frame = int(item["frame"])
                    graph = ConnectivityGraph.from_bitmap(item["adjacency"], frame=frame)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                    raise TrajectoryFormatError(
                        f"Línea {line_no} inválida en el flujo de grafos {filepath}",
                        details=repr(e)
                    )
                sinr = item.get("v2i_sinr_db")
                outage = item.get("v2i_outage")
                records.append(GraphRecord(
                    frame=frame,
                    graph=graph,
                    attack=bool(item.get("attack", False)),
                    v2i_sinr_db=tuple(sinr) if sinr is not None else None,
                    v2i_outage=tuple(bool(v) for v in outage) if outage is not None else None
                ))

        for expected, record in enumerate(records):
            if record.frame != expected:
                raise TrajectoryFormatError(
                    f"Flujo de grafos no consecutivo en {filepath}",
                    details=f"frame {record.frame} en la posición {expected}"
                )
        logger.info(f"Loaded graph stream {filepath}: {len(records)} frames")
        return records


class SeriesCSVImporter(BaseImporter):
    """Abnormality series CSV (frame, upsilon, threshold, decision, truth)."""

    SUPPORTED_EXTENSIONS = [".csv"]

    @classmethod
    def import_file(cls, filepath: str, modality: Optional[str] = None, **kwargs) -> AbnormalitySeries:
        cls.validate_file(filepath)
        try:
            df = pd.read_csv(filepath, encoding="utf-8")
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise TrajectoryFormatError(f"Serie ilegible: {filepath}", details=str(e))

        missing = [c for c in ("frame", "upsilon", "threshold", "decision") if c not in df.columns]
        if missing:
            raise TrajectoryFormatError(f"Faltan columnas en la serie {filepath}: {', '.join(missing)}")

        if modality is None:
            stem = Path(filepath).stem
            modality = next((m for m in MODALITIES if stem.endswith(m)), stem)

        truth = None
        if "truth" in df.columns and df["truth"].notna().all():
            truth = df["truth"].astype(int).astype(bool).to_numpy()

        thresholds = df["threshold"].to_numpy(dtype=float)
        if thresholds.size and not np.all(thresholds == thresholds[0]):
            raise ParameterError(f"La serie {filepath} mezcla umbrales distintos")

        return AbnormalitySeries(
            modality=modality,
            frames=df["frame"].to_numpy(dtype=np.int64),
            values=df["upsilon"].to_numpy(dtype=float),
            threshold=float(thresholds[0]) if thresholds.size else float("inf"),
            decisions=df["decision"].astype(int).astype(bool).to_numpy(),
            attack_truth=truth
        )


def load_scenario_json(path: str) -> Scenario:
    return ScenarioJSONImporter.import_file(path)


def load_graph_stream(path: str) -> List[GraphRecord]:
    return GraphStreamImporter.import_file(path)


def load_series(path: str, modality: Optional[str] = None) -> AbnormalitySeries:
    return SeriesCSVImporter.import_file(path, modality=modality)
