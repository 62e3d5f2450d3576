# importers/ngsim_importer.py
"""
NGSIM I-80 importer.

Converts the native NGSIM vehicle trajectory table (US feet, one row per
vehicle and frame) into the trajectory CSV schema. Local coordinates are
scaled to metres; global coordinates are projected from California State
Plane III to UTM 10N with pyproj.
"""

from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pyproj import Transformer

from constants import (
    DEFAULT_N_VEHICLES,
    FOOT,
    NGSIM_SOURCE_EPSG,
    NGSIM_TARGET_EPSG,
    TRAJECTORY_COLUMNS
)
from core.exceptions import FileOperationError, InsufficientDataError, TrajectoryFormatError
from importers.base_importer import BaseImporter
from utils.logger import get_logger

logger = get_logger(__name__)

# Column order of the headerless native file
NGSIM_COLUMNS = [
    "Vehicle_ID", "Frame_ID", "Total_Frames", "Global_Time", "Local_X", "Local_Y",
    "Global_X", "Global_Y", "v_Length", "v_Width", "v_Class", "v_Vel", "v_Acc",
    "Lane_ID", "Preceding", "Following", "Space_Hdwy", "Time_Hdwy"
]


class NGSIMImporter(BaseImporter):
    """Reads NGSIM native tables into trajectory rows."""

    SUPPORTED_EXTENSIONS = [".txt", ".csv"]

    @staticmethod
    def read_table(filepath: str) -> pd.DataFrame:
        """Read a whitespace or comma separated NGSIM table, with or without header."""
        with open(filepath, "r", encoding="utf-8-sig") as f:
            first = f.readline()
        separator = "," if "," in first else r"\s+"
        has_header = any(c.isalpha() for c in first)
        try:
            df = pd.read_csv(
                filepath,
                sep=separator,
                header=0 if has_header else None,
                names=None if has_header else NGSIM_COLUMNS,
                engine="python" if separator != "," else "c",
                encoding="utf-8-sig"
            )
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise TrajectoryFormatError(f"No se pudo leer la tabla NGSIM: {filepath}", details=str(e))
        df.columns = [str(c).strip() for c in df.columns]
        required = ["Vehicle_ID", "Frame_ID", "Local_X", "Local_Y", "Global_X", "Global_Y"]
        missing = [c for c in required if c not in df.columns]
        if missing:
            raise TrajectoryFormatError(
                f"Faltan columnas NGSIM: {', '.join(missing)}",
                details=f"columnas encontradas: {list(df.columns)}"
            )
        return df

    @classmethod
    def import_file(cls, filepath: str, vehicle_ids: Optional[Sequence[int]] = None,
                    frame_range: Optional[Tuple[int, int]] = None,
                    use_global: bool = False) -> pd.DataFrame:
        """
        Select vehicles and frames from an NGSIM table.

        Args:
            filepath: NGSIM table
            vehicle_ids: Vehicles to keep (default: the first four to appear)
            frame_range: Inclusive (first, last) Frame_ID range
            use_global: Project Global_X/Global_Y instead of scaling Local_X/Local_Y

        Returns:
            DataFrame in the trajectory schema, trimmed to the frames where
            every selected vehicle is present at both ends
        """
        cls.validate_file(filepath)
        df = cls.read_table(filepath)

        if vehicle_ids is None:
            vehicle_ids = pd.unique(df["Vehicle_ID"])[:DEFAULT_N_VEHICLES].tolist()
        vehicle_ids = [int(v) for v in vehicle_ids]
        df = df[df["Vehicle_ID"].isin(vehicle_ids)]
        if frame_range is not None:
            first, last = frame_range
            df = df[(df["Frame_ID"] >= first) & (df["Frame_ID"] <= last)]

        absent = sorted(set(vehicle_ids) - set(df["Vehicle_ID"].unique().tolist()))
        if absent:
            raise InsufficientDataError(f"Vehículos ausentes en la tabla NGSIM: {absent}")

        # trim to the span where all selected vehicles coexist
        presence = df.groupby("Frame_ID")["Vehicle_ID"].nunique()
        complete = presence.index[presence == len(vehicle_ids)]
        if complete.empty:
            raise InsufficientDataError("Los vehículos seleccionados nunca coinciden en un mismo frame")
        df = df[(df["Frame_ID"] >= complete.min()) & (df["Frame_ID"] <= complete.max())]

        if use_global:
            transformer = Transformer.from_crs(
                f"EPSG:{NGSIM_SOURCE_EPSG}", f"EPSG:{NGSIM_TARGET_EPSG}", always_xy=True
            )
            x, y = transformer.transform(df["Global_X"].to_numpy(dtype=float), df["Global_Y"].to_numpy(dtype=float))
        else:
            # Local_Y runs along the road, Local_X across it
            x = df["Local_Y"].to_numpy(dtype=float) * FOOT
            y = df["Local_X"].to_numpy(dtype=float) * FOOT

        result = pd.DataFrame({
            "frame": df["Frame_ID"].astype(np.int64).to_numpy(),
            "vehicle_id": df["Vehicle_ID"].astype(np.int64).to_numpy(),
            "x_m": np.asarray(x, dtype=float),
            "y_m": np.asarray(y, dtype=float),
        }).sort_values(["frame", "vehicle_id"], kind="stable")

        logger.info(
            f"NGSIM selection from {filepath}: vehicles={vehicle_ids}, "
            f"frames {int(complete.min())}-{int(complete.max())}, global={use_global}"
        )
        return result[TRAJECTORY_COLUMNS]


def convert_ngsim(path: str, out_path: str, vehicle_ids: Optional[Sequence[int]] = None,
                  frame_range: Optional[Tuple[int, int]] = None, use_global: bool = False) -> str:
    """Write the selected NGSIM vehicles as a trajectory CSV and return its path."""
    table = NGSIMImporter.import_file(path, vehicle_ids=vehicle_ids, frame_range=frame_range, use_global=use_global)
    out = Path(out_path)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(out, index=False, encoding="utf-8", float_format="%.4f")
    except OSError as e:
        raise FileOperationError("exportación", str(out), str(e))
    logger.info(f"NGSIM converted to {out} ({len(table)} rows)")
    return str(out)
