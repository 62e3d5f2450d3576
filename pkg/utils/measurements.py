"""
Measurement utilities for distances and power-unit conversions.
Planar (metric) geometry only: positions are metres in a local frame.
"""

from math import hypot, log10

import numpy as np


def planar_distance(a, b) -> float:
    """
    Euclidean distance between two planar points.

    Args:
        a: (x, y) in metres
        b: (x, y) in metres

    Returns:
        float: Distance in metres
    """
    return hypot(float(a[0]) - float(b[0]), float(a[1]) - float(b[1]))


def distance_matrix(positions) -> np.ndarray:
    """
    Pairwise Euclidean distances for an (N, 2) array of positions.

    Returns:
        (N, N) symmetric array with zero diagonal
    """
    pts = np.asarray(positions, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def dbm_to_watts(dbm: float) -> float:
    """Convert a power in dBm to watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    """Convert a power in watts to dBm."""
    return 10.0 * log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    """Convert a ratio in dB to a linear factor."""
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    """Convert a linear ratio to dB."""
    return 10.0 * log10(value)
