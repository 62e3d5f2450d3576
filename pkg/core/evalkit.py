# core/evalkit.py
"""
Detection metrics: ROC curves, AUC, frame-level detection rates and the
graph prediction rate.

A frame is positive when it lies inside any attack window.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import auc as area_under_curve
from sklearn.metrics import roc_curve

from core.exceptions import MissingTruthError, ParameterError, StreamAlignmentError
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class RocCurve:
    """
    ROC points sorted by threshold descending.

    The first threshold is +inf (nothing flagged), so the curve always
    starts at (0, 0) and ends at (1, 1).
    """
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float
    name: str = ""

    @property
    def points(self) -> List[Tuple[float, float, float]]:
        return [(float(f), float(t), float(h)) for f, t, h in zip(self.fpr, self.tpr, self.thresholds)]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "auc": self.auc,
            "points": [
                {"fpr": f, "tpr": t, "threshold": h if np.isfinite(h) else None}
                for f, t, h in self.points
            ],
        }


def roc(values, truth, name: str = "") -> RocCurve:
    """
    ROC of a score series against frame-level truth.

    Every distinct value is a threshold (tied values share a point); the AUC
    is the trapezoid area under the staircase.

    Raises:
        ParameterError: Lengths differ
        MissingTruthError: Truth holds a single class
    """
    scores = np.asarray(values, dtype=float)
    labels = np.asarray(truth, dtype=bool)
    if scores.shape != labels.shape:
        raise ParameterError("Valores y verdad con longitudes distintas", details=f"{scores.shape} != {labels.shape}")
    if labels.all() or not labels.any():
        raise MissingTruthError(
            "La verdad de ataque debe contener frames normales y atacados",
            details=f"positivos={int(labels.sum())}, total={labels.size}"
        )

    fpr, tpr, thresholds = roc_curve(labels, scores, drop_intermediate=False)
    # older scikit-learn uses max + 1 instead of inf for the first point
    thresholds = thresholds.astype(float)
    thresholds[0] = np.inf
    curve = RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auc=float(area_under_curve(fpr, tpr)), name=name)
    logger.debug(f"ROC {name or '(sin nombre)'}: {len(fpr)} points, AUC={curve.auc:.4f}")
    return curve


def attack_windows_of(truth) -> List[Tuple[int, int]]:
    """Contiguous runs of positive frames as half-open [start, end) pairs."""
    labels = np.asarray(truth, dtype=bool).astype(np.int8)
    edges = np.diff(np.concatenate([[0], labels, [0]]))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def detection_summary(series) -> dict:
    """
    Rates of an AbnormalitySeries at its own threshold.

    Latency is the number of frames from a window's start to its first H1
    frame, averaged over the windows that were detected at all.

    Raises:
        MissingTruthError: Series without ground truth
    """
    if series.attack_truth is None:
        raise MissingTruthError(f"La serie '{series.modality}' no tiene verdad de ataque")

    truth = np.asarray(series.attack_truth, dtype=bool)
    decisions = np.asarray(series.decisions, dtype=bool)
    tp = int(np.sum(decisions & truth))
    fp = int(np.sum(decisions & ~truth))
    positives = int(truth.sum())
    negatives = int((~truth).sum())

    windows = attack_windows_of(truth)
    latencies = []
    for start, end in windows:
        hits = np.flatnonzero(decisions[start:end])
        if hits.size:
            latencies.append(int(hits[0]))

    return {
        "modality": series.modality,
        "threshold": float(series.threshold),
        "frames": int(truth.size),
        "tpr": tp / positives if positives else None,
        "fpr": fp / negatives if negatives else None,
        "precision": tp / (tp + fp) if (tp + fp) else None,
        "h1_frames": int(decisions.sum()),
        "windows": len(windows),
        "windows_detected": len(latencies),
        "detection_latency_frames": float(np.mean(latencies)) if latencies else None,
    }


def graph_prediction_rate(snapshots, graphs) -> float:
    """
    Fraction of frames whose predicted graph equals the observed graph.

    Frames without an observed graph are skipped.

    Raises:
        StreamAlignmentError: Sequences of different length
    """
    if len(snapshots) != len(graphs):
        raise StreamAlignmentError(
            "Instantáneas y grafos con distinto número de frames",
            details=f"{len(snapshots)} != {len(graphs)}"
        )
    matches = [
        np.array_equal(snapshot.predicted_graph.adjacency, graph.adjacency)
        for snapshot, graph in zip(snapshots, graphs)
        if graph is not None
    ]
    return float(np.mean(matches)) if matches else 0.0


def tpr_at_fpr(curve: RocCurve, max_fpr: float) -> float:
    """Best TPR reachable with FPR <= max_fpr."""
    allowed = curve.fpr <= max_fpr
    return float(curve.tpr[allowed].max()) if allowed.any() else 0.0


def average_roc(curves: Sequence[RocCurve], grid: Optional[np.ndarray] = None, name: str = "mean") -> RocCurve:
    """
    Vertical average of several ROC curves on a common FPR grid.

    Each curve is read as a staircase (best TPR at FPR <= grid point).
    """
    if not curves:
        raise ParameterError("Se requiere al menos una curva ROC")
    grid = np.linspace(0.0, 1.0, 101) if grid is None else np.asarray(grid, dtype=float)
    stacked = []
    for curve in curves:
        idx = np.searchsorted(curve.fpr, grid, side="right") - 1
        stacked.append(curve.tpr[np.clip(idx, 0, None)])
    tpr = np.mean(stacked, axis=0)
    return RocCurve(
        fpr=grid,
        tpr=tpr,
        thresholds=np.full(grid.shape, np.nan),
        auc=float(area_under_curve(grid, tpr)),
        name=name
    )
