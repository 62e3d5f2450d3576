# importers/csv_importer.py
"""
Trajectory CSV importer.

Reads the fixed (frame, vehicle_id, x_m, y_m) schema into a Scenario.
Every vehicle must report in every frame; gaps are rejected, not interpolated.
"""

from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from constants import DEFAULT_DT, TRAJECTORY_COLUMNS, MIN_TRAJECTORY_FRAMES
from core.exceptions import (
    TrajectoryFormatError,
    TrajectoryGapError,
    InsufficientDataError
)
from core.scenario import Scenario
from importers.base_importer import BaseImporter
from utils.logger import get_logger

logger = get_logger(__name__)


class TrajectoryCSVImporter(BaseImporter):
    """Imports trajectory CSV files into Scenario objects."""

    SUPPORTED_EXTENSIONS = [".csv", ".txt"]

    @classmethod
    def import_file(cls, filepath: str, dt: float = DEFAULT_DT,
                    bs_position: Optional[Tuple[float, float]] = None,
                    source_tag: Optional[str] = None) -> Scenario:
        """
        Load a trajectory CSV.

        Args:
            filepath: Path to the CSV file (UTF-8, header row)
            dt: Seconds per frame
            bs_position: Base-station position; defaults to a roadside point
                50 m off the middle of the covered stretch
            source_tag: Free text stored in the scenario (default: file name)

        Returns:
            Scenario with frames re-indexed from 0 and vehicle ids re-indexed
            to 0..N-1 in ascending order of the original ids

        Raises:
            FileOperationError: If the file does not exist
            TrajectoryFormatError: Missing column, non-numeric value or duplicate row
            TrajectoryGapError: A vehicle is absent from a frame
            InsufficientDataError: Fewer than 3 frames
        """
        cls.validate_file(filepath)

        try:
            # utf-8-sig maneja el BOM que añaden algunas hojas de cálculo
            df = pd.read_csv(filepath, encoding="utf-8-sig", dtype=str, skipinitialspace=True)
        except (pd.errors.ParserError, UnicodeDecodeError, pd.errors.EmptyDataError) as e:
            raise TrajectoryFormatError(f"No se pudo leer el CSV: {filepath}", details=str(e))

        df.columns = [str(c).strip() for c in df.columns]
        missing = [c for c in TRAJECTORY_COLUMNS if c not in df.columns]
        if missing:
            raise TrajectoryFormatError(
                f"Faltan columnas en {filepath}: {', '.join(missing)}",
                details=f"columnas encontradas: {list(df.columns)}"
            )

        numeric = {}
        for col in TRAJECTORY_COLUMNS:
            values = pd.to_numeric(df[col].str.strip(), errors="coerce")
            bad = np.flatnonzero(values.isna().to_numpy() | ~np.isfinite(values.to_numpy(dtype=float, na_value=np.nan)))
            if bad.size:
                row = int(bad[0])
                # +2: la fila de encabezado es la línea 1
                raise TrajectoryFormatError(
                    f"Valor no numérico en la fila {row + 2}, columna '{col}': '{df[col].iloc[row]}'",
                    details=f"row={row + 2}, column={col}"
                )
            numeric[col] = values.to_numpy(dtype=float)

        for col in ("frame", "vehicle_id"):
            non_integer = np.flatnonzero(numeric[col] != np.round(numeric[col]))
            if non_integer.size:
                row = int(non_integer[0])
                raise TrajectoryFormatError(
                    f"La columna '{col}' debe ser entera (fila {row + 2})",
                    details=f"row={row + 2}, column={col}"
                )

        table = pd.DataFrame({
            "frame": numeric["frame"].astype(np.int64),
            "vehicle_id": numeric["vehicle_id"].astype(np.int64),
            "x_m": numeric["x_m"],
            "y_m": numeric["y_m"],
        })

        duplicated = np.flatnonzero(table.duplicated(["frame", "vehicle_id"]).to_numpy())
        if duplicated.size:
            row = int(duplicated[0])
            raise TrajectoryFormatError(
                f"Fila duplicada para (frame, vehicle_id) en la fila {row + 2}",
                details=f"row={row + 2}"
            )

        frames = np.sort(table["frame"].unique())
        vehicles = np.sort(table["vehicle_id"].unique())
        if len(frames) < MIN_TRAJECTORY_FRAMES:
            raise InsufficientDataError(
                f"Se requieren al menos {MIN_TRAJECTORY_FRAMES} frames; el archivo tiene {len(frames)}",
                details=str(filepath)
            )

        pivot_x = table.pivot(index="frame", columns="vehicle_id", values="x_m").reindex(index=frames, columns=vehicles)
        pivot_y = table.pivot(index="frame", columns="vehicle_id", values="y_m").reindex(index=frames, columns=vehicles)
        gaps = np.argwhere(pivot_x.isna().to_numpy())
        if gaps.size:
            frame_idx, vehicle_idx = gaps[0]
            raise TrajectoryGapError(int(vehicles[vehicle_idx]), int(frames[frame_idx]))

        positions = np.stack([pivot_x.to_numpy(), pivot_y.to_numpy()], axis=-1)

        if bs_position is None:
            x_mid = 0.5 * (positions[:, :, 0].min() + positions[:, :, 0].max())
            bs_position = (float(x_mid), float(positions[:, :, 1].min() - 50.0))

        scenario = Scenario.from_positions(
            positions,
            dt=dt,
            bs_position=bs_position,
            source_tag=source_tag if source_tag is not None else Path(filepath).name
        )
        logger.info(
            f"Loaded trajectories from {filepath}: N={scenario.n_vehicles}, "
            f"frames={scenario.n_frames}, vehicle ids={vehicles.tolist()}"
        )
        return scenario


def load_trajectories(path: str, dt: float = DEFAULT_DT, **kwargs) -> Scenario:
    """Load a trajectory CSV into a Scenario (see TrajectoryCSVImporter)."""
    return TrajectoryCSVImporter.import_file(path, dt=dt, **kwargs)
