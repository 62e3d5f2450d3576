# core/errdyn.py
"""
Error dynamics: null-force filtering, generalized errors and Growing Neural
Gas clustering of generalized states into letters.

A generalized state stacks a value and its first derivative. For the
positional modality the value is the vehicle position (optionally relative to
the platoon centroid) and the derivative its velocity. For the communication
modality the value is the vehicle's adjacency row relaxed to reals and the
derivative is the backward frame difference of that row.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from constants import (
    DEFAULT_GNG,
    COVARIANCE_REGULARIZATION,
    MODALITY_POSITIONAL,
    MODALITIES
)
from core.exceptions import DimensionMismatchError, InsufficientDataError, ParameterError
from core.scenario import Scenario
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class GeneralizedSample:
    """Generalized state [value; derivative] of one vehicle at one frame."""
    value: np.ndarray
    derivative: np.ndarray
    modality: str = MODALITY_POSITIONAL
    vehicle_id: int = 0
    frame: int = 0

    def __post_init__(self):
        value = np.array(self.value, dtype=float).ravel()
        derivative = np.array(self.derivative, dtype=float).ravel()
        if value.shape != derivative.shape:
            raise DimensionMismatchError(
                "Valor y derivada con dimensiones distintas",
                details=f"{value.shape} != {derivative.shape}"
            )
        if not (np.all(np.isfinite(value)) and np.all(np.isfinite(derivative))):
            raise ParameterError("Muestra generalizada con valores no finitos", details=f"frame={self.frame}")
        if self.modality not in MODALITIES:
            raise ParameterError(f"Modalidad desconocida: {self.modality}")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "derivative", derivative)

    @property
    def dim(self) -> int:
        return self.value.shape[0]

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.value, self.derivative])

    @classmethod
    def from_vector(cls, vector, modality: str = MODALITY_POSITIONAL,
                    vehicle_id: int = 0, frame: int = 0) -> "GeneralizedSample":
        vector = np.asarray(vector, dtype=float)
        d = vector.shape[0] // 2
        return cls(vector[:d], vector[d:], modality, vehicle_id, frame)


def null_force_predict(x_prev: GeneralizedSample, dt: float = 1.0) -> GeneralizedSample:
    """
    Constant-velocity prediction with null control.

    value <- value + dt * derivative, derivative unchanged.
    """
    return GeneralizedSample(
        value=x_prev.value + dt * x_prev.derivative,
        derivative=x_prev.derivative.copy(),
        modality=x_prev.modality,
        vehicle_id=x_prev.vehicle_id,
        frame=x_prev.frame + 1
    )


def generalized_error(observed: GeneralizedSample, predicted: GeneralizedSample) -> np.ndarray:
    """
    Generalized error in state space (measurement model taken as identity).

    Returns:
        2d-vector observed.vector - predicted.vector

    Raises:
        DimensionMismatchError: On differing dimensions or modalities
    """
    if observed.modality != predicted.modality or observed.dim != predicted.dim:
        raise DimensionMismatchError(
            "Muestras no comparables",
            details=f"{observed.modality}/{observed.dim} vs {predicted.modality}/{predicted.dim}"
        )
    return observed.vector - predicted.vector


def positional_samples(scenario: Scenario, platoon_frame: bool = True) -> np.ndarray:
    """
    Positional generalized states of every vehicle and frame.

    Args:
        scenario: Trajectory scenario
        platoon_frame: Express positions and velocities relative to the
            per-frame centroid of the vehicles

    Returns:
        (T, N, 4) array of [x, y, vx, vy]
    """
    positions = np.array(scenario.positions)
    velocities = np.array(scenario.velocities)
    if platoon_frame:
        positions = positions - positions.mean(axis=1, keepdims=True)
        velocities = velocities - velocities.mean(axis=1, keepdims=True)
    return np.concatenate([positions, velocities], axis=-1)


def communication_samples(adjacency: np.ndarray) -> np.ndarray:
    """
    Communication generalized states from an adjacency stream.

    Args:
        adjacency: (T, N, N) binary adjacency matrices

    Returns:
        (T, N, 2N) array: adjacency row, then row minus previous row
        (zero at the first frame)
    """
    rows = np.asarray(adjacency, dtype=float)
    if rows.ndim != 3 or rows.shape[1] != rows.shape[2]:
        raise DimensionMismatchError("Se esperaba un flujo (T, N, N) de adyacencias", details=str(rows.shape))
    diff = np.zeros_like(rows)
    diff[1:] = rows[1:] - rows[:-1]
    return np.concatenate([rows, diff], axis=-1)


def null_force_statistics(samples: np.ndarray, dt: float) -> Dict[str, list]:
    """
    Mean and RMS of the null-force generalized errors along each vehicle track.

    Args:
        samples: (T, N, 2d) generalized states
        dt: Step used by the null-force prediction

    Returns:
        dict with "mean" and "rms" lists (2d entries each)
    """
    d = samples.shape[-1] // 2
    predicted_value = samples[:-1, :, :d] + dt * samples[:-1, :, d:]
    predicted = np.concatenate([predicted_value, samples[:-1, :, d:]], axis=-1)
    errors = (samples[1:] - predicted).reshape(-1, 2 * d)
    return {
        "mean": errors.mean(axis=0).tolist(),
        "rms": np.sqrt((errors ** 2).mean(axis=0)).tolist(),
    }


class FeatureScaler:
    """Per-dimension standardiser; constant dimensions keep unit scale."""

    def __init__(self, mean=None, std=None):
        self.mean = None if mean is None else np.asarray(mean, dtype=float)
        self.std = None if std is None else np.asarray(std, dtype=float)

    def fit(self, samples: np.ndarray) -> "FeatureScaler":
        samples = np.asarray(samples, dtype=float)
        samples = samples.reshape(-1, samples.shape[-1])
        self.mean = samples.mean(axis=0)
        std = samples.std(axis=0)
        std[std < 1e-12] = 1.0
        self.std = std
        return self

    def transform(self, samples: np.ndarray) -> np.ndarray:
        return (np.asarray(samples, dtype=float) - self.mean) / self.std

    def inverse_transform(self, samples: np.ndarray) -> np.ndarray:
        return np.asarray(samples, dtype=float) * self.std + self.mean

    def transform_covariance(self, covariance: np.ndarray) -> np.ndarray:
        """Covariance in raw units -> normalized units."""
        scale = 1.0 / self.std
        return covariance * np.multiply.outer(scale, scale)

    def inverse_covariance(self, covariance: np.ndarray) -> np.ndarray:
        """Covariance in normalized units -> raw units."""
        return covariance * np.multiply.outer(self.std, self.std)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureScaler":
        return cls(mean=data["mean"], std=data["std"])


@dataclass
class GngNode:
    """GNG unit: prototype, accumulated error and aged edges {neighbor index: age}."""
    prototype: np.ndarray
    error_accum: float = 0.0
    edges: Dict[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Letter:
    """Gaussian cluster N(mean, covariance) in normalized generalized-state space."""
    id: int
    mean: np.ndarray
    covariance: np.ndarray
    modality: str
    member_count: int

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        covariance = np.array(self.covariance, dtype=float)
        if covariance.shape != (mean.shape[0], mean.shape[0]):
            raise DimensionMismatchError(
                f"Covarianza de la letra {self.id} incompatible con su media",
                details=f"{covariance.shape} vs {mean.shape}"
            )
        if self.member_count < 1:
            raise ParameterError(f"La letra {self.id} no tiene miembros")
        mean.setflags(write=False)
        covariance.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", covariance)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
            "modality": self.modality,
            "member_count": self.member_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Letter":
        return cls(
            id=int(data["id"]),
            mean=data["mean"],
            covariance=data["covariance"],
            modality=data["modality"],
            member_count=int(data["member_count"])
        )


def _gng_parameters(config: dict) -> dict:
    params = dict(DEFAULT_GNG)
    params.update(config or {})
    if params["max_nodes"] < 2:
        raise ParameterError(f"max_nodes debe ser >= 2: {params['max_nodes']}")
    if params["lambda_insert"] < 1 or params["epochs"] < 1 or params["max_age"] < 1:
        raise ParameterError("lambda_insert, epochs y max_age deben ser >= 1", details=str(params))
    return params


def gng_fit(samples, config: dict = None, seed: int = 0) -> List[GngNode]:
    """
    Growing Neural Gas over generalized-state samples.

    Starts from two nodes placed on random samples. For every presented sample
    the winner moves by eps_b and its topological neighbours by eps_n, edges
    of the winner age, and the winner/runner-up edge is refreshed. Every
    lambda_insert steps a node is inserted between the highest-error node and
    its highest-error neighbour. Edges older than max_age and isolated nodes
    are pruned. A final pass moves every prototype onto the centroid of the
    samples it wins.

    Args:
        samples: (M, D) array, M >= max_nodes
        config: GNG settings (see DEFAULT_GNG); missing keys use defaults
        seed: Seed for initialisation and sample order

    Returns:
        List of GngNode (edges refer to list indices)

    Raises:
        InsufficientDataError: If fewer than max_nodes samples are given
        ParameterError: If max_nodes < 2
    """
    params = _gng_parameters(config)
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2:
        raise DimensionMismatchError("Se esperaba una matriz de muestras (M, D)", details=str(data.shape))
    n_samples = data.shape[0]
    if n_samples < params["max_nodes"]:
        raise InsufficientDataError(
            f"GNG requiere al menos {params['max_nodes']} muestras; hay {n_samples}"
        )

    rng = np.random.default_rng(seed)
    init = rng.choice(n_samples, size=2, replace=False)
    weights = data[init].copy()
    errors = np.zeros(2)
    ages = np.full((2, 2), -1, dtype=np.int64)  # -1: no edge
    ages[0, 1] = ages[1, 0] = 0

    eps_b, eps_n = params["eps_b"], params["eps_n"]
    step = 0
    for _ in range(params["epochs"]):
        for idx in rng.permutation(n_samples):
            x = data[idx]
            dist2 = np.sum((weights - x) ** 2, axis=1)
            order = np.argsort(dist2, kind="stable")
            s1, s2 = order[0], order[1]

            neighbors = np.flatnonzero(ages[s1] >= 0)
            ages[s1, neighbors] += 1
            ages[neighbors, s1] += 1

            errors[s1] += dist2[s1]
            weights[s1] += eps_b * (x - weights[s1])
            weights[neighbors] += eps_n * (x - weights[neighbors])

            ages[s1, s2] = ages[s2, s1] = 0

            stale = ages > params["max_age"]
            if stale.any():
                ages[stale] = -1
                isolated = np.flatnonzero(~np.any(ages >= 0, axis=1))
                if isolated.size and weights.shape[0] - isolated.size >= 2:
                    keep = np.setdiff1d(np.arange(weights.shape[0]), isolated)
                    weights, errors = weights[keep], errors[keep]
                    ages = ages[np.ix_(keep, keep)]

            step += 1
            if step % params["lambda_insert"] == 0 and weights.shape[0] < params["max_nodes"]:
                q = int(np.argmax(errors))
                q_neighbors = np.flatnonzero(ages[q] >= 0)
                if q_neighbors.size:
                    f = int(q_neighbors[np.argmax(errors[q_neighbors])])
                    r = weights.shape[0]
                    weights = np.vstack([weights, 0.5 * (weights[q] + weights[f])])
                    grown = np.full((r + 1, r + 1), -1, dtype=np.int64)
                    grown[:r, :r] = ages
                    ages = grown
                    ages[q, f] = ages[f, q] = -1
                    ages[q, r] = ages[r, q] = 0
                    ages[f, r] = ages[r, f] = 0
                    errors[q] *= params["alpha_split"]
                    errors[f] *= params["alpha_split"]
                    errors = np.append(errors, errors[q])

            errors *= params["d_decay"]

    # centroid refinement
    winners = np.argmin(cdist(data, weights, "sqeuclidean"), axis=1)
    for k in range(weights.shape[0]):
        members = data[winners == k]
        if members.shape[0]:
            weights[k] = members.mean(axis=0)

    nodes = []
    for k in range(weights.shape[0]):
        neighbors = np.flatnonzero(ages[k] >= 0)
        nodes.append(GngNode(
            prototype=weights[k].copy(),
            error_accum=float(errors[k]),
            edges={int(j): int(ages[k, j]) for j in neighbors}
        ))
    logger.info(f"GNG fitted {len(nodes)} nodes on {n_samples} samples ({params['epochs']} epochs, seed={seed})")
    return nodes


def quantization_error(prototypes: np.ndarray, samples: np.ndarray) -> float:
    """Mean squared distance of the samples to their nearest prototype."""
    return float(np.mean(np.min(cdist(samples, prototypes, "sqeuclidean"), axis=1)))


def extract_letters(nodes: Sequence[GngNode], samples, modality: str = MODALITY_POSITIONAL,
                    regularization: float = COVARIANCE_REGULARIZATION) -> List[Letter]:
    """
    Turn GNG nodes into Gaussian letters.

    Each sample goes to its nearest prototype (Euclidean, ties to the lowest
    index); per-cluster empirical mean and covariance are computed, empty
    clusters dropped, and covariances regularized by + regularization * I.
    Letter ids are consecutive in node order.
    """
    if not nodes:
        raise ParameterError("Se requiere al menos un nodo GNG")
    data = np.asarray(samples, dtype=float)
    prototypes = np.array([node.prototype for node in nodes])
    assignment = np.argmin(cdist(data, prototypes, "sqeuclidean"), axis=1)

    dim = data.shape[1]
    letters = []
    for k in range(len(nodes)):
        members = data[assignment == k]
        if members.shape[0] == 0:
            continue
        mean = members.mean(axis=0)
        if members.shape[0] > 1:
            covariance = np.cov(members, rowvar=False, bias=True).reshape(dim, dim)
        else:
            covariance = np.zeros((dim, dim))
        covariance = 0.5 * (covariance + covariance.T) + regularization * np.eye(dim)
        letters.append(Letter(
            id=len(letters),
            mean=mean,
            covariance=covariance,
            modality=modality,
            member_count=int(members.shape[0])
        ))

    dropped = len(nodes) - len(letters)
    if dropped:
        logger.debug(f"{modality}: dropped {dropped} empty clusters")
    logger.info(f"{modality}: extracted {len(letters)} letters")
    return letters
