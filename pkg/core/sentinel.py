# core/sentinel.py
"""
Abnormality scoring.

Per frame and modality, the symmetric Kullback-Leibler divergence between the
predicted (pi) and diagnosed (lambda) word distributions is compared with a
threshold calibrated on an attack-free run.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.stats import entropy

from constants import DEFAULT_PHI, PROBABILITY_FLOOR, MODALITIES
from core.exceptions import (
    InsufficientDataError,
    MissingMessageError,
    ParameterError,
    SupportMismatchError
)
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class AbnormalitySeries:
    """
    Abnormality values of one modality over a run.

    Attributes:
        modality: positional or communication
        frames: Frame indices
        values: Symmetric KLD per frame (>= 0)
        threshold: Detection threshold
        decisions: values > threshold (H1)
        attack_truth: Frame-level ground truth, if known
    """
    modality: str
    frames: np.ndarray
    values: np.ndarray
    threshold: float
    decisions: np.ndarray
    attack_truth: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (len(self.frames) == len(self.values) == len(self.decisions)):
            raise ParameterError("Serie de anormalidad con longitudes distintas")
        if self.attack_truth is not None and len(self.attack_truth) != len(self.values):
            raise ParameterError(
                "La verdad de ataque no cubre la serie",
                details=f"{len(self.attack_truth)} != {len(self.values)}"
            )

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n_abnormal(self) -> int:
        return int(np.count_nonzero(self.decisions))

    def with_threshold(self, threshold: float) -> "AbnormalitySeries":
        """Same values re-decided under another threshold."""
        return AbnormalitySeries(
            modality=self.modality,
            frames=self.frames,
            values=self.values,
            threshold=float(threshold),
            decisions=decide(self.values, threshold),
            attack_truth=self.attack_truth
        )


def klda(pi, lam) -> float:
    """
    Symmetric KL divergence D(pi||lam) + D(lam||pi), natural log.

    Entries are floored at 1e-12 and renormalised before the logs.

    Raises:
        SupportMismatchError: If the distributions have different lengths
    """
    p = np.asarray(pi, dtype=float).ravel()
    q = np.asarray(lam, dtype=float).ravel()
    if p.shape != q.shape:
        raise SupportMismatchError(
            "Las distribuciones tienen soportes distintos",
            details=f"{p.size} != {q.size}"
        )
    p = np.maximum(p, PROBABILITY_FLOOR)
    q = np.maximum(q, PROBABILITY_FLOOR)
    # entropy() renormalises both arguments
    value = float(entropy(p, q) + entropy(q, p))
    return max(value, 0.0)


def calibrate_threshold(training_values: Sequence[float], phi: float = DEFAULT_PHI) -> float:
    """
    Threshold = mean + phi * std of an attack-free abnormality trace.

    The standard deviation uses the unbiased (n - 1) variance.

    Raises:
        InsufficientDataError: Fewer than two values
        ParameterError: Negative phi
    """
    values = np.asarray(training_values, dtype=float)
    if values.size < 2:
        raise InsufficientDataError(
            "Se requieren al menos 2 valores para calibrar el umbral",
            details=f"n={values.size}"
        )
    if phi < 0:
        raise ParameterError(f"phi no puede ser negativo: {phi}")
    return float(values.mean() + phi * values.std(ddof=1))


def decide(values, threshold: float) -> np.ndarray:
    """H1 where the value is strictly above the threshold."""
    return np.asarray(values, dtype=float) > threshold


def score_run(snapshots, modality: str, threshold: float,
              attack_truth=None) -> AbnormalitySeries:
    """
    Score every snapshot of a run.

    Args:
        snapshots: BeliefSnapshot sequence (after update)
        modality: positional or communication
        threshold: Detection threshold
        attack_truth: Optional per-frame ground truth

    Raises:
        MissingMessageError: A snapshot lacks pi or lambda for the modality
    """
    if modality not in MODALITIES:
        raise ParameterError(f"Modalidad desconocida: {modality}")

    frames = np.empty(len(snapshots), dtype=np.int64)
    values = np.empty(len(snapshots))
    for i, snapshot in enumerate(snapshots):
        pi, lam = snapshot.messages(modality)
        if pi is None or lam is None:
            raise MissingMessageError(snapshot.frame, modality)
        frames[i] = snapshot.frame
        values[i] = klda(pi, lam)

    truth = None if attack_truth is None else np.asarray(attack_truth, dtype=bool)
    series = AbnormalitySeries(
        modality=modality,
        frames=frames,
        values=values,
        threshold=float(threshold),
        decisions=decide(values, threshold),
        attack_truth=truth
    )
    logger.info(
        f"{modality}: {series.n_abnormal}/{len(series)} frames above threshold {threshold:.4f}"
    )
    return series
