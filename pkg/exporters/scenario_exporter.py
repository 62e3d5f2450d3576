# exporters/scenario_exporter.py
import json
from pathlib import Path

import numpy as np
import pandas as pd

from constants import TRAJECTORY_COLUMNS
from core.exceptions import FileOperationError
from core.scenario import Scenario
from utils.logger import get_logger

logger = get_logger(__name__)


class ScenarioExporter:
    @staticmethod
    def export_csv(scenario: Scenario, filename: str) -> str:
        """
        Escribe las trayectorias en el esquema (frame, vehicle_id, x_m, y_m).

        Las filas se ordenan por frame y luego por vehículo; las posiciones se
        escriben con repr completo para que la relectura sea exacta.

        Raises:
            FileOperationError: Si no se puede escribir el archivo.
        """
        frames, vehicles = np.meshgrid(
            np.arange(scenario.n_frames), np.arange(scenario.n_vehicles), indexing="ij"
        )
        table = pd.DataFrame({
            "frame": frames.ravel(),
            "vehicle_id": vehicles.ravel(),
            "x_m": scenario.positions[:, :, 0].ravel(),
            "y_m": scenario.positions[:, :, 1].ravel(),
        })[TRAJECTORY_COLUMNS]
        path = Path(filename)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            table.to_csv(path, index=False, encoding="utf-8", float_format="%.17g")
        except OSError as e:
            raise FileOperationError("exportación", str(path), str(e))
        logger.info(f"Trajectories written to {path} ({len(table)} rows)")
        return str(path)

    @staticmethod
    def export_json(scenario: Scenario, filename: str) -> str:
        """Caché JSON del escenario (posiciones y velocidades incluidas)."""
        path = Path(filename)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                json.dump(scenario.to_dict(), f, separators=(",", ":"))
        except OSError as e:
            raise FileOperationError("exportación", str(path), str(e))
        logger.info(f"Scenario cache written to {path}")
        return str(path)


def write_trajectories(scenario: Scenario, path: str) -> str:
    return ScenarioExporter.export_csv(scenario, path)
