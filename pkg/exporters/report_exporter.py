# exporters/report_exporter.py
"""
Detection report exporters: abnormality series, ROC curves, belief
snapshots and run summaries.
"""

import json
import math
from pathlib import Path
from typing import Sequence

import pandas as pd

from core.evalkit import RocCurve
from core.exceptions import FileOperationError
from core.immjpf import BeliefSnapshot, snapshot_to_dict
from core.sentinel import AbnormalitySeries
from utils.logger import get_logger

logger = get_logger(__name__)


def _prepare(filename: str) -> Path:
    path = Path(filename)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise FileOperationError("exportación", str(path), str(e))
    return path


def _json_safe(value):
    """Replace non-finite floats by None (JSON has no inf/nan)."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


class ReportExporter:

    @staticmethod
    def export_series(series: AbnormalitySeries, filename: str) -> str:
        """CSV with columns frame, upsilon, threshold, decision, truth (empty if unknown)."""
        path = _prepare(filename)
        table = pd.DataFrame({
            "frame": series.frames,
            "upsilon": series.values,
            "threshold": series.threshold,
            "decision": series.decisions.astype(int),
            "truth": series.attack_truth.astype(int) if series.attack_truth is not None else None,
        })
        try:
            table.to_csv(path, index=False, encoding="utf-8", float_format="%.10g")
        except OSError as e:
            raise FileOperationError("exportación", str(path), str(e))
        logger.info(f"Abnormality series ({series.modality}) written to {path}")
        return str(path)

    @staticmethod
    def export_roc(curve: RocCurve, basename: str) -> tuple:
        """Writes <basename>.csv (fpr, tpr, threshold) and <basename>.json."""
        csv_path = _prepare(f"{basename}.csv")
        json_path = Path(f"{basename}.json")
        table = pd.DataFrame({"fpr": curve.fpr, "tpr": curve.tpr, "threshold": curve.thresholds})
        try:
            table.to_csv(csv_path, index=False, encoding="utf-8", float_format="%.10g")
            with open(json_path, "w", encoding="utf-8") as f:
                json.dump(_json_safe(curve.to_dict()), f, indent=2)
        except OSError as e:
            raise FileOperationError("exportación", str(csv_path), str(e))
        logger.info(f"ROC '{curve.name}' written to {csv_path} (AUC={curve.auc:.4f})")
        return str(csv_path), str(json_path)

    @staticmethod
    def export_snapshots(snapshots: Sequence[BeliefSnapshot], filename: str) -> str:
        path = _prepare(filename)
        try:
            with open(path, "w", encoding="utf-8") as f:
                for snapshot in snapshots:
                    f.write(json.dumps(_json_safe(snapshot_to_dict(snapshot)), separators=(",", ":")))
                    f.write("\n")
        except OSError as e:
            raise FileOperationError("exportación", str(path), str(e))
        logger.info(f"{len(snapshots)} snapshots written to {path}")
        return str(path)

    @staticmethod
    def export_summary(summary: dict, filename: str) -> str:
        path = _prepare(filename)
        try:
            with open(path, "w", encoding="utf-8") as f:
                json.dump(_json_safe(summary), f, indent=2, ensure_ascii=False, sort_keys=True)
        except OSError as e:
            raise FileOperationError("exportación", str(path), str(e))
        return str(path)


def save_series(series: AbnormalitySeries, path: str) -> str:
    return ReportExporter.export_series(series, path)


def save_roc(curve: RocCurve, basename: str) -> tuple:
    return ReportExporter.export_roc(curve, basename)


def save_snapshots(snapshots: Sequence[BeliefSnapshot], path: str) -> str:
    return ReportExporter.export_snapshots(snapshots, path)


def save_summary(summary: dict, path: str) -> str:
    return ReportExporter.export_summary(summary, path)
