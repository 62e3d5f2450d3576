# core/radio.py
"""
RF layer of the V2X simulator.

Channel gains follow the 128.1 + 37.6 log10(d_km) macro-cell path loss with
log-normal shadowing and Rayleigh fading. The connectivity graph is the
distance-thresholded V2V adjacency; a road side jammer perturbs it by
deleting links whose SINR falls below a threshold while an attack is active.
"""

from dataclasses import dataclass, fields, replace
from math import log10
from typing import List, Optional, Sequence, Tuple

import numpy as np

from constants import (
    DEFAULT_CHANNEL,
    DEFAULT_JAMMER,
    DEFAULT_SINR_THRESHOLD_DB,
    THERMAL_NOISE_DBM_HZ,
    JAMMER_MODES,
    JAMMER_MODE_SINGLE
)
from core.exceptions import ChannelDomainError, ParameterError, DimensionMismatchError
from core.scenario import VehicleState, Scenario
from utils.logger import get_logger
from utils.measurements import planar_distance, distance_matrix, dbm_to_watts, db_to_linear, linear_to_db

logger = get_logger(__name__)

# Jammer-to-receiver distances are floored here; the path-loss law has no
# meaning inside the antenna near field.
JAMMER_NEAR_FIELD_M = 1.0


@dataclass(frozen=True)
class ChannelParams:
    """Radio parameters of the cell (defaults: simulation parameter table)."""
    carrier_hz: float = DEFAULT_CHANNEL["carrier_hz"]
    bandwidth_hz: float = DEFAULT_CHANNEL["bandwidth_hz"]
    cell_radius_m: float = DEFAULT_CHANNEL["cell_radius_m"]
    bs_antenna_height_m: float = DEFAULT_CHANNEL["bs_antenna_height_m"]
    vehicle_antenna_height_m: float = DEFAULT_CHANNEL["vehicle_antenna_height_m"]
    bs_gain_dbi: float = DEFAULT_CHANNEL["bs_gain_dbi"]
    vehicle_gain_dbi: float = DEFAULT_CHANNEL["vehicle_gain_dbi"]
    noise_figure_db: float = DEFAULT_CHANNEL["noise_figure_db"]
    tx_power_dbm: float = DEFAULT_CHANNEL["tx_power_dbm"]
    jammer_power_dbm: float = DEFAULT_CHANNEL["jammer_power_dbm"]
    snr_db: float = DEFAULT_CHANNEL["snr_db"]
    pathloss_const_db: float = DEFAULT_CHANNEL["pathloss_const_db"]
    pathloss_exp_coeff: float = DEFAULT_CHANNEL["pathloss_exp_coeff"]
    shadow_sigma_db: float = DEFAULT_CHANNEL["shadow_sigma_db"]
    enable_shadowing: bool = DEFAULT_CHANNEL["enable_shadowing"]
    enable_fading: bool = DEFAULT_CHANNEL["enable_fading"]

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                continue
            if not np.isfinite(value):
                raise ParameterError(f"Parámetro de canal no finito: {f.name}={value}")
        if self.bandwidth_hz <= 0:
            raise ParameterError(f"bandwidth_hz debe ser positivo: {self.bandwidth_hz}")
        if self.cell_radius_m <= 0:
            raise ParameterError(f"cell_radius_m debe ser positivo: {self.cell_radius_m}")
        if self.shadow_sigma_db < 0:
            raise ParameterError(f"shadow_sigma_db no puede ser negativo: {self.shadow_sigma_db}")

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelParams":
        """Build from a config section; keys that are not channel fields are ignored."""
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})

    @property
    def noise_power_w(self) -> float:
        """Thermal noise over the bandwidth plus the receiver noise figure."""
        return dbm_to_watts(THERMAL_NOISE_DBM_HZ + 10.0 * log10(self.bandwidth_hz) + self.noise_figure_db)

    @property
    def v2v_antenna_gain_db(self) -> float:
        return 2.0 * self.vehicle_gain_dbi

    @property
    def v2i_antenna_gain_db(self) -> float:
        return self.bs_gain_dbi + self.vehicle_gain_dbi

    def deterministic(self) -> "ChannelParams":
        """Copy with shadowing and fading switched off."""
        return replace(self, enable_shadowing=False, enable_fading=False)


@dataclass(frozen=True)
class JammerConfig:
    """
    Road side jammer.

    Attributes:
        position: (x, y) of the jammer in metres
        power_dbm: Transmit power of the jammer
        attack_windows: Sorted, non-overlapping half-open [start, end) frame intervals
        mode: constant-single (one window) or periodic-multi
        enabled: False gives the H0 (no jammer) channel
        track: Optional per-frame positions; when set the jammer moves with it
    """
    position: Tuple[float, float]
    power_dbm: float = DEFAULT_JAMMER["power_dbm"]
    attack_windows: Tuple[Tuple[int, int], ...] = tuple(tuple(w) for w in DEFAULT_JAMMER["attack_windows"])
    mode: str = DEFAULT_JAMMER["mode"]
    enabled: bool = True
    track: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        windows = tuple((int(s), int(e)) for s, e in self.attack_windows)
        object.__setattr__(self, "attack_windows", windows)
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        if self.track is not None:
            object.__setattr__(self, "track", tuple((float(x), float(y)) for x, y in self.track))

        if self.mode not in JAMMER_MODES:
            raise ParameterError(f"Modo de jammer desconocido: {self.mode}", details=f"válidos: {JAMMER_MODES}")
        if not np.isfinite(self.power_dbm):
            raise ParameterError(f"Potencia del jammer no finita: {self.power_dbm}")
        for start, end in windows:
            if start < 0 or end <= start:
                raise ParameterError(f"Ventana de ataque inválida: [{start}, {end})")
        for (_, end), (start, _) in zip(windows, windows[1:]):
            if start < end:
                raise ParameterError(
                    "Las ventanas de ataque deben estar ordenadas y sin solaparse",
                    details=str(windows)
                )
        if self.mode == JAMMER_MODE_SINGLE and len(windows) != 1:
            raise ParameterError(
                f"El modo '{JAMMER_MODE_SINGLE}' requiere exactamente una ventana",
                details=str(windows)
            )

    def is_active(self, frame: int) -> bool:
        """True when the jammer transmits at this frame."""
        if not self.enabled:
            return False
        return any(start <= frame < end for start, end in self.attack_windows)

    def with_power(self, power_dbm: float) -> "JammerConfig":
        return replace(self, power_dbm=power_dbm)

    def position_at(self, frame: int) -> Tuple[float, float]:
        """Position at a frame: the track entry when a track covers it, else the fixed site."""
        if self.track is not None and 0 <= frame < len(self.track):
            return self.track[frame]
        return self.position


@dataclass(frozen=True)
class ConnectivityGraph:
    """Undirected V2V connectivity at one frame."""
    n: int
    adjacency: np.ndarray
    frame: int = 0

    def __post_init__(self):
        adjacency = np.array(self.adjacency, dtype=np.uint8)
        if adjacency.shape != (self.n, self.n):
            raise DimensionMismatchError(
                "La matriz de adyacencia no es n×n",
                details=f"shape={adjacency.shape}, n={self.n}"
            )
        if np.any(adjacency > 1):
            raise ParameterError("La matriz de adyacencia debe ser binaria")
        if not np.array_equal(adjacency, adjacency.T):
            raise ParameterError("La matriz de adyacencia debe ser simétrica", details=f"frame={self.frame}")
        if np.any(np.diag(adjacency)):
            raise ParameterError("La diagonal de la matriz de adyacencia debe ser nula", details=f"frame={self.frame}")
        adjacency.setflags(write=False)
        object.__setattr__(self, "adjacency", adjacency)

    @classmethod
    def empty(cls, n: int, frame: int = 0) -> "ConnectivityGraph":
        return cls(n=n, adjacency=np.zeros((n, n), dtype=np.uint8), frame=frame)

    def edges(self) -> List[Tuple[int, int]]:
        """Edges as (i, j) pairs with i < j."""
        rows, cols = np.nonzero(np.triu(self.adjacency, k=1))
        return list(zip(rows.tolist(), cols.tolist()))

    @property
    def edge_count(self) -> int:
        return int(np.triu(self.adjacency, k=1).sum())

    def to_bitmap(self) -> List[str]:
        """Rows as strings of '0'/'1' (the graph stream encoding)."""
        return ["".join(str(int(v)) for v in row) for row in self.adjacency]

    @classmethod
    def from_bitmap(cls, rows: Sequence[str], frame: int = 0) -> "ConnectivityGraph":
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise DimensionMismatchError("Bitmap de adyacencia no cuadrado", details=f"frame={frame}")
        adjacency = np.array([[int(c) for c in row] for row in rows], dtype=np.uint8).reshape(n, n)
        return cls(n=n, adjacency=adjacency, frame=frame)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConnectivityGraph):
            return NotImplemented
        return self.n == other.n and self.frame == other.frame and np.array_equal(self.adjacency, other.adjacency)

    __hash__ = None


def pathloss_db(distance_km: float, params: ChannelParams) -> float:
    """
    Macro-cell path loss.

    Args:
        distance_km: Link distance in kilometres (> 0)
        params: Channel parameters (path-loss constant and coefficient)

    Returns:
        float: pathloss_const_db + pathloss_exp_coeff * log10(distance_km)

    Raises:
        ChannelDomainError: If the distance is not positive
    """
    if not distance_km > 0 or not np.isfinite(distance_km):
        raise ChannelDomainError(
            f"La distancia del enlace debe ser positiva: {distance_km} km"
        )
    return params.pathloss_const_db + params.pathloss_exp_coeff * log10(distance_km)


def channel_gain(tx_pos, rx_pos, params: ChannelParams, rng: np.random.Generator,
                 antenna_gain_db: Optional[float] = None, height_delta_m: float = 0.0,
                 min_distance_m: Optional[float] = None) -> float:
    """
    Linear power gain of one link: g = alpha * h.

    alpha combines antenna gains, path loss and log-normal shadowing; h is the
    Rayleigh small-scale power term |CN(0, 1)|^2. The draws consume the rng
    in a fixed order (shadowing, then fading) regardless of parameter values.

    Args:
        tx_pos: Transmitter (x, y) in metres
        rx_pos: Receiver (x, y) in metres
        params: Channel parameters
        rng: Random stream
        antenna_gain_db: Sum of tx and rx antenna gains (default: V2V)
        height_delta_m: Antenna height difference, enters the 3-D distance
        min_distance_m: Floor applied to the planar distance instead of
            rejecting coincident positions

    Returns:
        float: Strictly positive linear gain

    Raises:
        ChannelDomainError: If the positions coincide and no floor is given
    """
    distance = planar_distance(tx_pos, rx_pos)
    if min_distance_m is not None:
        distance = max(distance, min_distance_m)
    if distance <= 0:
        raise ChannelDomainError(
            "Transmisor y receptor en la misma posición",
            details=f"tx={tuple(tx_pos)}, rx={tuple(rx_pos)}"
        )
    distance_3d = float(np.hypot(distance, height_delta_m))

    if antenna_gain_db is None:
        antenna_gain_db = params.v2v_antenna_gain_db

    gain_db = antenna_gain_db - pathloss_db(distance_3d / 1000.0, params)
    if params.enable_shadowing:
        gain_db += rng.normal(0.0, params.shadow_sigma_db)
    gain = db_to_linear(gain_db)

    if params.enable_fading:
        h = (rng.normal() + 1j * rng.normal()) / np.sqrt(2.0)
        gain *= float(np.abs(h) ** 2)
        # gain must stay > 0 for the dB conversion
        gain = max(gain, np.finfo(float).tiny)
    return gain


def received_under_hypothesis(link: Tuple[VehicleState, VehicleState], jammer: Optional[JammerConfig],
                              frame: int, params: ChannelParams,
                              rng: np.random.Generator) -> Tuple[float, float, float]:
    """
    Received powers at the link receiver under H0 / H1.

    Args:
        link: (transmitter, receiver) vehicle states
        jammer: Jammer configuration, or None for H0
        frame: Frame index (selects the attack window)
        params: Channel parameters
        rng: Random stream

    Returns:
        Tuple of (signal_power_w, interference_power_w, noise_power_w)
    """
    tx, rx = link
    signal = dbm_to_watts(params.tx_power_dbm) * channel_gain(tx.position, rx.position, params, rng)

    interference = 0.0
    if jammer is not None and jammer.is_active(frame):
        interference = dbm_to_watts(jammer.power_dbm) * channel_gain(
            jammer.position_at(frame), rx.position, params, rng,
            min_distance_m=JAMMER_NEAR_FIELD_M
        )

    return signal, interference, params.noise_power_w


def sinr_db(signal_w: float, interference_w: float, noise_w: float) -> float:
    """Signal to interference plus noise ratio in dB."""
    return linear_to_db(signal_w / (interference_w + noise_w))


def observe_graph(frame_states: Sequence[VehicleState], d_k: float) -> ConnectivityGraph:
    """
    Distance-thresholded V2V connectivity.

    Args:
        frame_states: The N vehicle states of one frame (N >= 2)
        d_k: Connectivity distance in metres; distance <= d_k is connected

    Returns:
        ConnectivityGraph for the frame of the states
    """
    n = len(frame_states)
    if n < 2:
        raise ParameterError(f"Se requieren al menos 2 vehículos para formar un grafo: {n}")
    positions = np.array([s.position for s in frame_states], dtype=float)
    adjacency = (distance_matrix(positions) <= d_k).astype(np.uint8)
    np.fill_diagonal(adjacency, 0)
    return ConnectivityGraph(n=n, adjacency=adjacency, frame=int(frame_states[0].timestamp))


def perturb_graph(g: ConnectivityGraph, frame_states: Sequence[VehicleState], jammer: Optional[JammerConfig],
                  frame: int, params: ChannelParams, rng: np.random.Generator,
                  sinr_threshold_db: float = DEFAULT_SINR_THRESHOLD_DB) -> ConnectivityGraph:
    """
    Jammer-informed graph perturbation.

    While an attack window is active, each edge (i, j) is evaluated in both
    directions and dropped when min(SINR at i, SINR at j) < sinr_threshold_db.
    Outside the windows the graph is returned unchanged.

    Args:
        g: Observed (clean) graph
        frame_states: Vehicle states of the frame, len == g.n
        jammer: Jammer configuration (None or disabled leaves g unchanged)
        frame: Frame index
        params: Channel parameters
        rng: Random stream
        sinr_threshold_db: Edge survival threshold

    Returns:
        ConnectivityGraph whose edge set is a subset of g's
    """
    if len(frame_states) != g.n:
        raise DimensionMismatchError(
            "Los estados del frame no coinciden con el grafo",
            details=f"{len(frame_states)} estados, n={g.n}"
        )
    if jammer is None or not jammer.is_active(frame):
        return g

    adjacency = np.array(g.adjacency)
    dropped = 0
    for i, j in g.edges():
        at_j = sinr_db(*received_under_hypothesis((frame_states[i], frame_states[j]), jammer, frame, params, rng))
        at_i = sinr_db(*received_under_hypothesis((frame_states[j], frame_states[i]), jammer, frame, params, rng))
        if min(at_i, at_j) < sinr_threshold_db:
            adjacency[i, j] = adjacency[j, i] = 0
            dropped += 1

    if dropped:
        logger.debug(f"Frame {frame}: jammer dropped {dropped}/{g.edge_count} edges")
    return ConnectivityGraph(n=g.n, adjacency=adjacency, frame=g.frame)


def v2i_sinr_db(frame_states: Sequence[VehicleState], bs_position, jammer: Optional[JammerConfig],
                frame: int, params: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """
    Uplink SINR of every vehicle at the base station.

    Uses BS plus vehicle antenna gains and the BS/vehicle antenna height
    difference; jammer interference is added while an attack is active.

    Returns:
        (N,) array of SINR values in dB
    """
    height_delta = params.bs_antenna_height_m - params.vehicle_antenna_height_m
    noise = params.noise_power_w
    active = jammer is not None and jammer.is_active(frame)
    report = np.empty(len(frame_states))
    for n, state in enumerate(frame_states):
        signal = dbm_to_watts(params.tx_power_dbm) * channel_gain(
            state.position, bs_position, params, rng,
            antenna_gain_db=params.v2i_antenna_gain_db,
            height_delta_m=height_delta
        )
        interference = 0.0
        if active:
            interference = dbm_to_watts(jammer.power_dbm) * channel_gain(
                jammer.position_at(frame), bs_position, params, rng,
                antenna_gain_db=params.v2i_antenna_gain_db,
                height_delta_m=height_delta,
                min_distance_m=JAMMER_NEAR_FIELD_M
            )
        report[n] = sinr_db(signal, interference, noise)
    return report


def attack_truth(jammer: Optional[JammerConfig], n_frames: int) -> np.ndarray:
    """Per-frame ground truth: True inside any attack window of an enabled jammer."""
    truth = np.zeros(n_frames, dtype=bool)
    if jammer is None or not jammer.enabled:
        return truth
    for start, end in jammer.attack_windows:
        truth[max(start, 0):min(end, n_frames)] = True
    return truth


def periodic_windows(start: int, length: int, period: int, count: int) -> List[Tuple[int, int]]:
    """
    Attack windows of a periodic (multi-attack) jammer.

    Args:
        start: First frame of the first window
        length: Frames per window
        period: Frames between window starts (>= length)
        count: Number of windows

    Returns:
        List of half-open (start, end) windows
    """
    if start < 0 or length < 1 or count < 1 or period < length:
        raise ParameterError(
            "Parámetros de ventanas periódicas inválidos",
            details=f"start={start}, length={length}, period={period}, count={count}"
        )
    return [(start + k * period, start + k * period + length) for k in range(count)]


def roadside_track(scenario: Scenario, offset_m: float) -> Tuple[Tuple[float, float], ...]:
    """
    Default jammer path: beside the road, level with the platoon centroid
    at every frame.

    Args:
        scenario: Scenario the jammer follows
        offset_m: Distance from the outermost lane position to the jammer

    Returns:
        One (x, y) per frame
    """
    y = float(scenario.positions[:, :, 1].min() - offset_m)
    xs = scenario.positions[:, :, 0].mean(axis=1)
    return tuple((float(x), y) for x in xs)


def jammer_from_config(section: dict, scenario: Scenario, channel: ChannelParams) -> JammerConfig:
    """
    Build the JammerConfig of a run from its config section.

    An explicit position gives a fixed jammer. A missing position gives a
    road side jammer that keeps level with the platoon. A missing power
    falls back to the channel's jammer power.
    """
    windows = [tuple(w) for w in section.get("attack_windows", DEFAULT_JAMMER["attack_windows"])]
    position = section.get("position")
    track = None
    if position is None:
        track = roadside_track(scenario, section.get("roadside_offset_m", DEFAULT_JAMMER["roadside_offset_m"]))
        first = min(windows[0][0], scenario.n_frames - 1) if windows else 0
        position = track[first]
    power = section.get("power_dbm")
    if power is None:
        power = channel.jammer_power_dbm
    jammer = JammerConfig(
        position=tuple(position),
        power_dbm=float(power),
        attack_windows=tuple(windows),
        mode=section.get("mode", DEFAULT_JAMMER["mode"]),
        enabled=bool(section.get("enabled", True)),
        track=track
    )
    logger.info(
        f"Jammer: enabled={jammer.enabled}, position=({jammer.position[0]:.1f}, {jammer.position[1]:.1f}), "
        f"moving={track is not None}, power={jammer.power_dbm} dBm, windows={list(jammer.attack_windows)}"
    )
    return jammer


@dataclass(frozen=True)
class GraphRecord:
    """One line of a graph stream: the graph plus the V2I report of the frame."""
    frame: int
    graph: ConnectivityGraph
    attack: bool = False
    v2i_sinr_db: Optional[Tuple[float, ...]] = None
    v2i_outage: Optional[Tuple[bool, ...]] = None


def simulate_graph_streams(scenario: Scenario, jammer: Optional[JammerConfig], params: ChannelParams,
                           d_k: float, seed: int,
                           sinr_threshold_db: float = DEFAULT_SINR_THRESHOLD_DB) -> Tuple[List[GraphRecord], List[GraphRecord]]:
    """
    Clean and jammed graph streams of a scenario.

    Both streams share the distance-thresholded graph; the jammed one applies
    the jammer perturbation. Each stream draws its V2I reports from its own
    random stream derived from seed.

    Returns:
        (clean, jammed) lists of GraphRecord, one per frame
    """
    if d_k < 0:
        raise ParameterError(f"d_k no puede ser negativo: {d_k}")
    clean_rng, jammed_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    truth = attack_truth(jammer, scenario.n_frames)

    clean, jammed = [], []
    for t in range(scenario.n_frames):
        states = scenario.frame(t)
        graph = observe_graph(states, d_k)

        report = v2i_sinr_db(states, scenario.bs_position, None, t, params, clean_rng)
        clean.append(GraphRecord(
            frame=t, graph=graph, attack=False,
            v2i_sinr_db=tuple(report.tolist()),
            v2i_outage=tuple((report < params.snr_db).tolist())
        ))

        perturbed = perturb_graph(graph, states, jammer, t, params, jammed_rng, sinr_threshold_db)
        report = v2i_sinr_db(states, scenario.bs_position, jammer, t, params, jammed_rng)
        jammed.append(GraphRecord(
            frame=t, graph=perturbed, attack=bool(truth[t]),
            v2i_sinr_db=tuple(report.tolist()),
            v2i_outage=tuple((report < params.snr_db).tolist())
        ))

    clean_edges = sum(r.graph.edge_count for r in clean)
    jammed_edges = sum(r.graph.edge_count for r in jammed)
    logger.info(
        f"Simulated {scenario.n_frames} frames: {clean_edges} clean edge-frames, "
        f"{jammed_edges} under jamming ({int(truth.sum())} attacked frames)"
    )
    return clean, jammed
