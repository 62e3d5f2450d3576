# controllers/evaluate_controller.py
"""
Controller for the evaluate command.
"""

from pathlib import Path
from typing import List, Sequence

from constants import ROC_FILE_TEMPLATE
from core.evalkit import average_roc, detection_summary, roc, tpr_at_fpr
from core.exceptions import UsageError
from exporters.report_exporter import save_roc
from importers.stream_importer import load_series
from utils.error_handler import stage
from utils.logger import get_logger

logger = get_logger(__name__)

# Operating point reported next to the AUC
REPORT_MAX_FPR = 0.05


class EvaluateController:
    """ROC curves and detection rates of abnormality series."""

    @staticmethod
    def evaluate_one(path: str, out_dir: Path, name: str) -> dict:
        with stage(f"evaluación {name}"):
            series = load_series(path)
            summary = detection_summary(series)
            curve = roc(series.values, series.attack_truth, name=name)
            csv_path, json_path = save_roc(curve, str(out_dir / ROC_FILE_TEMPLATE.format(name=name)))
        return {
            "name": name,
            "curve": curve,
            "auc": curve.auc,
            "tpr_at_fpr": tpr_at_fpr(curve, REPORT_MAX_FPR),
            "tpr": summary["tpr"],
            "fpr": summary["fpr"],
            "precision": summary["precision"],
            "latency": summary["detection_latency_frames"],
            "files": [csv_path, json_path],
        }

    @staticmethod
    def series_names(series_paths: Sequence[str]) -> List[str]:
        """File stems, prefixed with the parent directory when two stems collide."""
        stems = [Path(p).stem for p in series_paths]
        return [
            f"{Path(p).parent.name}_{stem}" if stems.count(stem) > 1 else stem
            for p, stem in zip(series_paths, stems)
        ]

    @staticmethod
    def run(series_paths: Sequence[str], out_dir: Path, average: bool = False) -> List[dict]:
        """
        One ROC per series file; with average and several series, also the
        mean ROC over a common FPR grid.

        Raises:
            UsageError: Empty input list
        """
        if not series_paths:
            raise UsageError("Indique al menos un archivo de serie de anormalidad")
        out_dir = Path(out_dir)

        names = EvaluateController.series_names(series_paths)
        rows = [EvaluateController.evaluate_one(path, out_dir, name) for path, name in zip(series_paths, names)]

        if average and len(rows) > 1:
            mean = average_roc([row["curve"] for row in rows])
            files = save_roc(mean, str(out_dir / ROC_FILE_TEMPLATE.format(name=mean.name)))
            rows.append({
                "name": mean.name,
                "curve": mean,
                "auc": mean.auc,
                "tpr_at_fpr": tpr_at_fpr(mean, REPORT_MAX_FPR),
                "tpr": None,
                "fpr": None,
                "precision": None,
                "latency": None,
                "files": list(files),
            })
        logger.info(f"Evaluated {len(series_paths)} series")
        return rows

    @staticmethod
    def format_table(rows: Sequence[dict]) -> str:
        """Plain-text summary table printed by the CLI."""
        def fmt(value, pattern="{:.3f}"):
            return "-" if value is None else pattern.format(value)

        header = f"{'serie':<32} {'AUC':>6} {'TPR@5%':>7} {'TPR':>6} {'FPR':>6} {'prec.':>6} {'latencia':>9}"
        lines = [header, "-" * len(header)]
        for row in rows:
            lines.append(
                f"{row['name']:<32} {fmt(row['auc']):>6} {fmt(row['tpr_at_fpr']):>7} {fmt(row['tpr']):>6} "
                f"{fmt(row['fpr']):>6} {fmt(row['precision']):>6} {fmt(row['latency'], '{:.1f}'):>9}"
            )
        return "\n".join(lines)
