# core/scenario.py
"""
Multi-vehicle trajectory scenarios.

A Scenario holds N vehicles reported at a fixed frame interval. Positions are
metres in a local planar frame; velocities are forward differences of the
positions. Scenarios are immutable once built.
"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from constants import (
    DEFAULT_DT,
    LANE_WIDTH_M,
    MIN_SYNTH_VEHICLES,
    MIN_SYNTH_FRAMES,
    MIN_TRAJECTORY_FRAMES
)
from core.exceptions import ParameterError, InsufficientDataError, DimensionMismatchError
from utils.logger import get_logger
from utils.measurements import planar_distance

logger = get_logger(__name__)


@dataclass(frozen=True)
class VehicleState:
    """State reported by one vehicle at one frame."""
    vehicle_id: int
    position: Tuple[float, float]
    velocity: Tuple[float, float]
    timestamp: int

    def __post_init__(self):
        values = tuple(self.position) + tuple(self.velocity)
        if len(values) != 4 or not np.all(np.isfinite(values)):
            raise ParameterError(
                f"Estado del vehículo {self.vehicle_id} no finito en el frame {self.timestamp}",
                details=str(values)
            )


def relative_distance(a: VehicleState, b: VehicleState) -> float:
    """
    Distance in metres between two vehicles.

    Args:
        a: First vehicle state
        b: Second vehicle state

    Returns:
        float: Euclidean distance, symmetric in its arguments
    """
    return planar_distance(a.position, b.position)


def forward_velocities(positions: np.ndarray, dt: float) -> np.ndarray:
    """
    Velocities by forward differences.

    v_t = (p_{t+1} - p_t) / dt; the last frame repeats the previous velocity.

    Args:
        positions: (T, N, 2) array, T >= 2
        dt: Seconds per frame

    Returns:
        (T, N, 2) array of velocities in m/s
    """
    velocities = np.empty_like(positions)
    velocities[:-1] = (positions[1:] - positions[:-1]) / dt
    velocities[-1] = velocities[-2]
    return velocities


@dataclass(frozen=True)
class Scenario:
    """
    Timestep stream of vehicle states.

    Attributes:
        n_vehicles: Number of vehicles N
        dt: Seconds per frame
        positions: (T, N, 2) positions in metres
        velocities: (T, N, 2) velocities in m/s
        bs_position: (x, y) of the base station in metres
        source_tag: Dataset name or synthesis seed
    """
    n_vehicles: int
    dt: float
    positions: np.ndarray
    velocities: np.ndarray
    bs_position: Tuple[float, float] = (0.0, 0.0)
    source_tag: str = ""
    _frames: list = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        positions = np.array(self.positions, dtype=float)
        velocities = np.array(self.velocities, dtype=float)

        if positions.ndim != 3 or positions.shape[1:] != (self.n_vehicles, 2):
            raise DimensionMismatchError(
                "Las posiciones deben tener forma (frames, N, 2)",
                details=f"shape={positions.shape}, N={self.n_vehicles}"
            )
        if velocities.shape != positions.shape:
            raise DimensionMismatchError(
                "Velocidades y posiciones con formas distintas",
                details=f"{velocities.shape} != {positions.shape}"
            )
        if self.dt <= 0:
            raise ParameterError(f"dt debe ser positivo: {self.dt}")
        if not (np.all(np.isfinite(positions)) and np.all(np.isfinite(velocities))):
            raise ParameterError("El escenario contiene valores no finitos")

        positions.setflags(write=False)
        velocities.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "velocities", velocities)
        object.__setattr__(self, "bs_position", (float(self.bs_position[0]), float(self.bs_position[1])))

    @classmethod
    def from_positions(cls, positions, dt: float = DEFAULT_DT, bs_position=(0.0, 0.0),
                       source_tag: str = "") -> "Scenario":
        """
        Build a scenario from positions, deriving velocities.

        Raises:
            InsufficientDataError: If fewer than 3 frames are given
        """
        positions = np.asarray(positions, dtype=float)
        if positions.ndim != 3 or positions.shape[0] < MIN_TRAJECTORY_FRAMES:
            raise InsufficientDataError(
                f"Se requieren al menos {MIN_TRAJECTORY_FRAMES} frames",
                details=f"shape={positions.shape}"
            )
        return cls(
            n_vehicles=positions.shape[1],
            dt=dt,
            positions=positions,
            velocities=forward_velocities(positions, dt),
            bs_position=bs_position,
            source_tag=source_tag
        )

    @property
    def n_frames(self) -> int:
        return self.positions.shape[0]

    def __len__(self) -> int:
        return self.n_frames

    def frame(self, t: int) -> Tuple[VehicleState, ...]:
        """Return the N vehicle states of frame t."""
        return tuple(
            VehicleState(
                vehicle_id=n,
                position=(float(self.positions[t, n, 0]), float(self.positions[t, n, 1])),
                velocity=(float(self.velocities[t, n, 0]), float(self.velocities[t, n, 1])),
                timestamp=t
            )
            for n in range(self.n_vehicles)
        )

    @property
    def frames(self) -> List[Tuple[VehicleState, ...]]:
        """All frames as tuples of VehicleState (built lazily)."""
        if self._frames is None:
            object.__setattr__(self, "_frames", [self.frame(t) for t in range(self.n_frames)])
        return self._frames

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.n_vehicles == other.n_vehicles
            and self.dt == other.dt
            and self.bs_position == other.bs_position
            and self.source_tag == other.source_tag
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.velocities, other.velocities)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        """JSON-ready representation used for scenario caching."""
        return {
            "n_vehicles": self.n_vehicles,
            "dt": self.dt,
            "bs_position": list(self.bs_position),
            "source_tag": self.source_tag,
            "positions": self.positions.tolist(),
            "velocities": self.velocities.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return cls(
            n_vehicles=int(data["n_vehicles"]),
            dt=float(data["dt"]),
            positions=np.asarray(data["positions"], dtype=float),
            velocities=np.asarray(data["velocities"], dtype=float),
            bs_position=tuple(data.get("bs_position", (0.0, 0.0))),
            source_tag=str(data.get("source_tag", ""))
        )


def _lane_change_profile(n_frames: int, lane_count: int, rng: np.random.Generator,
                         dt: float, start_lane: int) -> np.ndarray:
    """
    Lateral offset (metres) of one vehicle over time.

    Lane changes start at random instants and last about 3 s with a smooth
    cosine profile; the vehicle never leaves the carriageway.
    """
    lateral = np.full(n_frames, start_lane * LANE_WIDTH_M)
    if lane_count < 2:
        return lateral

    duration = max(2, int(round(3.0 / dt)))
    rate = dt / 15.0  # one lane change every ~15 s on average
    lane = start_lane
    t = 0
    while t < n_frames:
        if rng.random() < rate and t + duration < n_frames:
            options = [l for l in (lane - 1, lane + 1) if 0 <= l < lane_count]
            target = options[int(rng.integers(len(options)))]
            ramp = 0.5 - 0.5 * np.cos(np.linspace(0.0, np.pi, duration))
            lateral[t:t + duration] = (lane + (target - lane) * ramp) * LANE_WIDTH_M
            lateral[t + duration:] = target * LANE_WIDTH_M
            lane = target
            t += duration
        else:
            t += 1
    return lateral


def synthesize_freeway(n_vehicles: int, n_frames: int, lane_count: int, seed: int,
                       dt: float = DEFAULT_DT) -> Scenario:
    """
    Synthesize a freeway platoon scenario.

    Vehicles drive as a loose platoon whose common speed follows a slow
    congestion wave. Each vehicle oscillates around its slot in the platoon,
    so inter-vehicle distances repeatedly cross the V2V connectivity range,
    and changes lane now and then.

    Args:
        n_vehicles: Number of vehicles (>= 2)
        n_frames: Number of frames (>= 50)
        lane_count: Number of lanes (>= 1)
        seed: Seed of the generator; equal seeds give bit-identical scenarios
        dt: Seconds per frame

    Returns:
        Scenario with velocities from forward differences

    Raises:
        ParameterError: If a parameter is below its minimum
    """
    if n_vehicles < MIN_SYNTH_VEHICLES:
        raise ParameterError(f"n_vehicles debe ser >= {MIN_SYNTH_VEHICLES}: {n_vehicles}")
    if n_frames < MIN_SYNTH_FRAMES:
        raise ParameterError(f"n_frames debe ser >= {MIN_SYNTH_FRAMES}: {n_frames}")
    if lane_count < 1:
        raise ParameterError(f"lane_count debe ser >= 1: {lane_count}")

    rng = np.random.default_rng(seed)
    time = np.arange(n_frames) * dt

    # Platoon speed: congested traffic with a slow stop-and-go wave
    base_speed = rng.uniform(6.0, 10.0)
    wave_amp = rng.uniform(1.0, 3.0)
    wave_period = rng.uniform(20.0, 40.0)
    wave_phase = rng.uniform(0.0, 2.0 * np.pi)
    speed = base_speed + wave_amp * np.sin(2.0 * np.pi * time / wave_period + wave_phase)
    platoon_x = np.concatenate([[0.0], np.cumsum(speed[:-1] * dt)])

    positions = np.empty((n_frames, n_vehicles, 2))
    slot = 0.0
    for n in range(n_vehicles):
        slot -= rng.uniform(5.0, 11.0)
        amp = rng.uniform(2.0, 6.0)
        period = rng.uniform(8.0, 20.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        offset = slot + amp * np.sin(2.0 * np.pi * time / period + phase)
        start_lane = int(rng.integers(lane_count))
        positions[:, n, 0] = platoon_x + offset
        positions[:, n, 1] = _lane_change_profile(n_frames, lane_count, rng, dt, start_lane)

    x_mid = 0.5 * (positions[:, :, 0].min() + positions[:, :, 0].max())
    bs_position = (x_mid, -50.0)

    logger.info(
        f"Synthesized freeway scenario: N={n_vehicles}, frames={n_frames}, "
        f"lanes={lane_count}, seed={seed}"
    )
    return Scenario.from_positions(positions, dt=dt, bs_position=bs_position,
                                   source_tag=f"synthetic-freeway-seed{seed}")
