# core/immjpf.py
"""
Interactive modified Markov jump particle filter.

Discrete levels (positional words and the letters they decode to) are
tracked by a particle filter; the continuous generalized state of every
vehicle by a Kalman filter controlled by the predicted letters. Top-down
predictions (pi) and bottom-up diagnostics (lambda) are produced at word
level for both modalities. The communication modality is predicted from the
positional one through the interaction matrix, weighed against the edge
probabilities of the predicted Kalman positions, and diagnosed from the
observed connectivity graph.

Word distributions carry one extra trailing entry for UNKNOWN (a letter
combination outside the dictionary).
"""

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import logsumexp
from scipy.stats import norm

from constants import (
    DEFAULT_FILTER,
    DEFAULT_SMOOTHING,
    COVARIANCE_REGULARIZATION,
    EDGE_PROBABILITY_FLOOR,
    MODALITY_POSITIONAL,
    MODALITY_COMMUNICATION,
    PROBABILITY_FLOOR,
    STOCHASTIC_TOLERANCE
)
from core.exceptions import (
    DimensionMismatchError,
    FilterStateError,
    InsufficientDataError,
    ParameterError,
    StreamAlignmentError
)
from core.radio import ConnectivityGraph
from core.scenario import Scenario
from core.vocabulary import (
    ModelBundle,
    LetterMetric,
    PatternMetric,
    check_row_stochastic,
    letter_responsibilities,
    word_message
)
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class FilterConfig:
    """Runtime settings of the filter."""
    n_particles: int = DEFAULT_FILTER["n_particles"]
    measurement_noise_m: float = DEFAULT_FILTER["measurement_noise_m"]
    process_noise_scale: float = DEFAULT_FILTER["process_noise_scale"]
    prior_covariance: float = DEFAULT_FILTER["prior_covariance"]
    control_gain: float = DEFAULT_FILTER["control_gain"]
    responsibility_temperature: float = DEFAULT_FILTER["responsibility_temperature"]

    def __post_init__(self):
        if self.n_particles < 1:
            raise ParameterError(f"n_particles debe ser >= 1: {self.n_particles}")
        if self.measurement_noise_m <= 0 or self.prior_covariance <= 0:
            raise ParameterError("El ruido de medida y la covarianza inicial deben ser positivos")
        if self.process_noise_scale < 0 or self.control_gain < 0:
            raise ParameterError("process_noise_scale y control_gain no pueden ser negativos")
        if self.responsibility_temperature <= 0:
            raise ParameterError("responsibility_temperature debe ser positiva")

    @classmethod
    def from_dict(cls, data: dict) -> "FilterConfig":
        keys = cls.__dataclass_fields__.keys()
        return cls(**{k: v for k, v in (data or {}).items() if k in keys})


@dataclass(frozen=True)
class Particle:
    """One hypothesis over the positional word and its letters."""
    pos_word: int
    letters: Tuple[int, ...]
    weight: float
    dwell: Tuple[int, ...]
    word_dwell: int = 1


@dataclass(frozen=True)
class KalmanTrack:
    """Generalized state [x, y, vx, vy] of one vehicle."""
    vehicle_id: int
    mean: np.ndarray
    covariance: np.ndarray
    letter: int


@dataclass(frozen=True)
class FrameObservation:
    """Reported positions (N, 2) and, if available, the observed graph."""
    frame: int
    positions: np.ndarray
    graph: Optional[ConnectivityGraph] = None


@dataclass(frozen=True)
class BeliefSnapshot:
    """
    Messages of one frame.

    pi_* are filled by predict_step; lambda_* and posterior_* by update_step.
    Word vectors have length W + 1 (UNKNOWN last); letter arrays are (N, L).
    observed_word_* is the hard-decoded observation (W for UNKNOWN).
    """
    frame: int
    pi_word_pos: np.ndarray
    pi_word_comm: np.ndarray
    pi_letters: np.ndarray
    predicted_graph: ConnectivityGraph
    tracks: Tuple[KalmanTrack, ...] = ()
    lambda_word_pos: Optional[np.ndarray] = None
    lambda_word_comm: Optional[np.ndarray] = None
    lambda_letters: Optional[np.ndarray] = None
    posterior_word_pos: Optional[np.ndarray] = None
    posterior_word_comm: Optional[np.ndarray] = None
    posterior_letters: Optional[np.ndarray] = None
    observed_word_pos: Optional[int] = None
    observed_word_comm: Optional[int] = None
    ess: Optional[float] = None
    resampled: bool = False
    weights_reset: bool = False

    def messages(self, modality: str) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
        """(pi, lambda) word distributions of a modality."""
        if modality == MODALITY_POSITIONAL:
            return self.pi_word_pos, self.lambda_word_pos
        if modality == MODALITY_COMMUNICATION:
            return self.pi_word_comm, self.lambda_word_comm
        raise ParameterError(f"Modalidad desconocida: {modality}")


def transition_matrix(dt: float) -> np.ndarray:
    """Constant-velocity dynamics A for [x, y, vx, vy]."""
    A = np.eye(4)
    A[0, 2] = A[1, 3] = dt
    return A


def control_matrix(dt: float) -> np.ndarray:
    """Control input B = [dt I; I] acting on velocity corrections."""
    return np.vstack([dt * np.eye(2), np.eye(2)])


def _symmetrize(covariance: np.ndarray) -> np.ndarray:
    covariance = 0.5 * (covariance + covariance.T)
    min_eig = np.linalg.eigvalsh(covariance).min()
    if min_eig < -STOCHASTIC_TOLERANCE:
        logger.warning(f"Covariance lost positive semidefiniteness (min eigenvalue {min_eig:.3e}), repairing")
        covariance = covariance + (COVARIANCE_REGULARIZATION - min_eig) * np.eye(covariance.shape[0])
    return covariance


def kalman_predict(mean: np.ndarray, covariance: np.ndarray, dt: float,
                   control: Optional[np.ndarray] = None,
                   process_noise: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    x <- A x + B u, P <- A P A^T + Q.

    With control None (null force) and process_noise None this is the
    null-force prediction.
    """
    A = transition_matrix(dt)
    mean = A @ mean
    if control is not None:
        mean = mean + control_matrix(dt) @ control
    covariance = A @ covariance @ A.T
    if process_noise is not None:
        covariance = covariance + process_noise
    return mean, _symmetrize(covariance)


def kalman_update(mean: np.ndarray, covariance: np.ndarray, z: np.ndarray,
                  measurement_noise: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Position-only measurement update (H = [I 0])."""
    H = np.hstack([np.eye(2), np.zeros((2, 2))])
    S = H @ covariance @ H.T + measurement_noise
    factor = cho_factor(S, lower=True, check_finite=False)
    gain = cho_solve(factor, H @ covariance, check_finite=False).T
    mean = mean + gain @ (np.asarray(z, dtype=float) - H @ mean)
    covariance = covariance - gain @ S @ gain.T
    return mean, _symmetrize(covariance)


def gaussian_log_likelihood(x: np.ndarray, means: np.ndarray, covariances: np.ndarray) -> np.ndarray:
    """
    log N(x; means[l], covariances[l]) for every l.

    Args:
        x: (D,) point
        means: (L, D)
        covariances: (L, D, D) positive definite

    Returns:
        (L,) log densities
    """
    chol = np.linalg.cholesky(covariances)
    diff = (x - means)[..., None]
    z = np.linalg.solve(chol, diff)[..., 0]
    log_det = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1)), axis=-1)
    dim = means.shape[-1]
    return -0.5 * (np.sum(z * z, axis=-1) + log_det + dim * np.log(2.0 * np.pi))


def _normalize(vector: np.ndarray, fallback: Optional[np.ndarray] = None) -> np.ndarray:
    total = vector.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        if fallback is None:
            fallback = np.ones_like(vector)
        vector = np.where(total > 0, vector, fallback)
        total = vector.sum(axis=-1, keepdims=True)
    return vector / total


def _with_unknown(distribution: np.ndarray, unknown_mass: float) -> np.ndarray:
    extended = np.append(distribution, unknown_mass)
    return extended / extended.sum()


def sample_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one index per row of a (P, K) row-stochastic array (inverse CDF)."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random((probs.shape[0], 1)) * cdf[:, -1:]
    return np.minimum((cdf < u).sum(axis=1), probs.shape[1] - 1)


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling indices."""
    n = weights.shape[0]
    positions = (rng.random() + np.arange(n)) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.searchsorted(cumulative, positions)


def edge_probabilities(means: np.ndarray, covariances: np.ndarray, d_k: float) -> np.ndarray:
    """
    Probability that each vehicle pair is within range d_k.

    The pair distance is treated as Gaussian along the axis joining the two
    position estimates, with the summed position covariances projected on it.

    Args:
        means: (N, 4) generalized state means
        covariances: (N, 4, 4) state covariances
        d_k: Connectivity range in metres

    Returns:
        (E,) probabilities over the pairs i < j in np.triu_indices order
    """
    i, j = np.triu_indices(means.shape[0], 1)
    delta = means[j, :2] - means[i, :2]
    distance = np.hypot(delta[:, 0], delta[:, 1])
    axis = np.where(
        distance[:, None] > 0,
        delta / np.maximum(distance, COVARIANCE_REGULARIZATION)[:, None],
        np.array([1.0, 0.0])
    )
    joint = covariances[i, :2, :2] + covariances[j, :2, :2]
    variance = np.einsum("ei,eij,ej->e", axis, joint, axis)
    return norm.cdf((d_k - distance) / np.sqrt(np.maximum(variance, COVARIANCE_REGULARIZATION)))


def word_edge_signatures(letter_means: np.ndarray, word_table: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Hard edge pattern of every communication word.

    Communication letters are [adjacency row, row change] in raw units, so an
    edge (i, j) of a word is read from the letters of both endpoints.

    Args:
        letter_means: (L, 2N) raw letter means
        word_table: (W, N) letter ids
        n: Number of vehicles

    Returns:
        (edges, changes), both (W, E) int8: 0/1 adjacency and -1/0/+1 change
    """
    i, j = np.triu_indices(n, 1)
    e = np.arange(i.size)
    rows_i = letter_means[word_table[:, i]]
    rows_j = letter_means[word_table[:, j]]
    adjacency = 0.5 * (rows_i[:, e, j] + rows_j[:, e, i])
    change = 0.5 * (rows_i[:, e, n + j] + rows_j[:, e, n + i])
    return (adjacency >= 0.5).astype(np.int8), np.rint(np.clip(change, -1.0, 1.0)).astype(np.int8)


def graph_log_likelihood(edge_probs: np.ndarray, word_edges: np.ndarray, word_changes: np.ndarray,
                         previous: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Log compatibility of every communication word with the predicted geometry.

    Each edge adds log p or log(1 - p) by the word's adjacency. Given the
    previous graph, every edge whose change disagrees with the word's
    adjacency adds log EDGE_PROBABILITY_FLOOR.

    Returns:
        (W,) log likelihoods
    """
    p = np.clip(edge_probs, EDGE_PROBABILITY_FLOOR, 1.0 - EDGE_PROBABILITY_FLOOR)
    log_lik = np.where(word_edges == 1, np.log(p), np.log1p(-p)).sum(axis=1)
    if previous is not None:
        mismatched = word_changes != (word_edges - previous)
        log_lik = log_lik + np.log(EDGE_PROBABILITY_FLOOR) * mismatched.sum(axis=1)
    return log_lik


def _check_messages(**messages) -> None:
    for name, probs in messages.items():
        check_row_stochastic(probs, name, error=FilterStateError)


class _FilterTables:
    """Arrays derived once from the model bundle."""

    def __init__(self, model: ModelBundle, config: FilterConfig):
        pos = model.dictionaries[MODALITY_POSITIONAL]
        comm = model.dictionaries[MODALITY_COMMUNICATION]
        self.n_vehicles = model.n_vehicles
        self.dt = model.dt
        self.platoon_frame = model.platoon_frame

        self.pos_table = pos.word_table()
        self.comm_table = comm.word_table()
        self.n_pos_words = pos.n_words
        self.n_comm_words = comm.n_words
        self.n_pos_letters = pos.n_letters
        self.comm_adjacency = comm.word_adjacency

        word_tm = model.word_transitions[MODALITY_POSITIONAL]
        self.pos_word_probs = word_tm.binned()
        self.pos_tau_edges = None if word_tm.tau_probs is None else np.asarray(word_tm.tau_bin_edges)
        self.letter_probs = model.letter_transitions[MODALITY_POSITIONAL].probs
        self.comm_word_probs = model.word_transitions[MODALITY_COMMUNICATION].probs
        self.phi = model.interaction.probs

        self.pos_scaler = pos.scaler
        self.comm_scaler = comm.scaler
        self.letter_means = np.array([l.mean for l in pos.letters])
        self.letter_covs = np.array([l.covariance for l in pos.letters])
        self.letter_means_raw = pos.scaler.inverse_transform(self.letter_means)
        self.letter_covs_raw = np.array([pos.scaler.inverse_covariance(c) for c in self.letter_covs])

        self.comm_letters = comm.letters
        self.comm_metric = LetterMetric(comm.letters)
        self.comm_patterns = PatternMetric(comm.letters, comm.scaler)

        # geometry coupling needs the range and [adjacency row, change] letters
        self.d_k = model.config.get("channel", {}).get("d_k")
        self.pairs = np.triu_indices(self.n_vehicles, 1)
        self.geometric = (
            self.d_k is not None and self.n_vehicles >= 2
            and self.comm_patterns.means.shape[1] == 2 * self.n_vehicles
        )
        if self.geometric:
            self.word_edges, self.word_changes = word_edge_signatures(
                self.comm_patterns.means, self.comm_table, self.n_vehicles
            )
            signatures = np.hstack([self.word_edges, self.word_changes])
            _, groups = np.unique(signatures, axis=0, return_inverse=True)
            self.word_groups = np.asarray(groups).reshape(-1)

        self.unknown_mass = float(model.config.get("vocabulary", {}).get("smoothing", DEFAULT_SMOOTHING))
        self.measurement_noise = (config.measurement_noise_m ** 2) * np.eye(2)

    def word_bins(self, dwell: np.ndarray) -> np.ndarray:
        if self.pos_tau_edges is None:
            return np.zeros_like(dwell)
        return np.searchsorted(self.pos_tau_edges, dwell, side="right")


@dataclass
class FilterState:
    """Mutable filter state, owned by one run."""
    config: FilterConfig
    tables: _FilterTables
    rng: np.random.Generator
    pos_word: np.ndarray
    word_dwell: np.ndarray
    letter_dwell: np.ndarray
    weights: np.ndarray
    letter_posterior: np.ndarray
    comm_belief: np.ndarray
    means: Optional[np.ndarray] = None
    covariances: Optional[np.ndarray] = None
    prev_adjacency: Optional[np.ndarray] = None
    frame: int = 0
    pending: Optional[BeliefSnapshot] = None
    n_resamples: int = 0
    n_resets: int = 0

    @property
    def n_particles(self) -> int:
        return self.weights.shape[0]

    def particles(self) -> List[Particle]:
        letters = self.tables.pos_table[self.pos_word]
        return [
            Particle(
                pos_word=int(self.pos_word[p]),
                letters=tuple(letters[p].tolist()),
                weight=float(self.weights[p]),
                dwell=tuple(self.letter_dwell[p].tolist()),
                word_dwell=int(self.word_dwell[p])
            )
            for p in range(self.n_particles)
        ]

    def tracks(self, letters: Optional[np.ndarray] = None) -> Tuple[KalmanTrack, ...]:
        if self.means is None:
            return ()
        if letters is None:
            letters = np.argmax(self.letter_posterior, axis=1)
        return tuple(
            KalmanTrack(vehicle_id=n, mean=self.means[n].copy(), covariance=self.covariances[n].copy(),
                        letter=int(letters[n]))
            for n in range(self.tables.n_vehicles)
        )


def init_filter(model: ModelBundle, n_particles: int, seed: int,
                config: Optional[FilterConfig] = None) -> FilterState:
    """
    Particles drawn uniformly over the training words with weight 1/P.

    Kalman tracks start at the first observation (see update_step).

    Raises:
        ParameterError: P < 1
        InsufficientDataError: Empty positional dictionary
    """
    if n_particles < 1:
        raise ParameterError(f"Se requiere al menos una partícula: {n_particles}")
    config = replace(config or FilterConfig(), n_particles=n_particles)
    tables = _FilterTables(model, config)
    if tables.n_pos_words == 0 or tables.n_comm_words == 0:
        raise InsufficientDataError("El diccionario del modelo está vacío")

    rng = np.random.default_rng(seed)
    n = tables.n_vehicles
    state = FilterState(
        config=config,
        tables=tables,
        rng=rng,
        pos_word=rng.integers(tables.n_pos_words, size=n_particles),
        word_dwell=np.ones(n_particles, dtype=np.int64),
        letter_dwell=np.ones((n_particles, n), dtype=np.int64),
        weights=np.full(n_particles, 1.0 / n_particles),
        letter_posterior=np.full((n, tables.n_pos_letters), 1.0 / tables.n_pos_letters),
        comm_belief=np.full(tables.n_comm_words, 1.0 / tables.n_comm_words)
    )
    logger.debug(f"Filter initialised: P={n_particles}, words={tables.n_pos_words}/{tables.n_comm_words}, seed={seed}")
    return state


def _geometric_prediction(state: "FilterState", prior: np.ndarray) -> np.ndarray:
    """
    Communication prediction given the predicted vehicle positions.

    Words sharing an edge pattern form a group; each group gets the
    probability of its pattern under the edge probabilities of the Kalman
    prediction, shared among its words in proportion to the prior.
    """
    tables = state.tables
    edge_probs = edge_probabilities(state.means, state.covariances, tables.d_k)
    previous = None
    if state.prev_adjacency is not None:
        previous = state.prev_adjacency[tables.pairs].astype(np.int8)
    log_lik = graph_log_likelihood(edge_probs, tables.word_edges, tables.word_changes, previous)

    group_mass = np.bincount(tables.word_groups, weights=prior)[tables.word_groups]
    within = np.divide(prior, group_mass, out=np.zeros_like(prior), where=group_mass > 0)
    return _normalize(within * np.exp(log_lik - log_lik.max()), fallback=prior)


def predict_step(state: FilterState, model: ModelBundle = None) -> BeliefSnapshot:
    """
    Top-down prediction for the next frame.

    Every particle draws its next word from the (dwell-conditioned) word
    transition row multiplied by the coupling of the previous communication
    belief through Phi; weights absorb the coupling normaliser. Letters are
    decoded from the drawn words and combined with the letter transitions of
    the previous letter posterior. Each vehicle's Kalman state is predicted
    under the control of its predicted letters. pi over communication words
    is Phi^T pi(positional words) times the propagated communication belief;
    once Kalman tracks exist it is conditioned on the edge probabilities of
    the predicted positions (see _geometric_prediction). The communication
    prediction puts no mass on UNKNOWN beyond the probability floor.
    """
    tables = state.tables
    P = state.n_particles
    n = tables.n_vehicles

    # word level
    rows = tables.pos_word_probs[tables.word_bins(state.word_dwell), state.pos_word]
    coupling = tables.phi @ state.comm_belief
    proposal = rows * coupling
    normaliser = proposal.sum(axis=1)
    degenerate = normaliser <= 0
    if np.any(degenerate):
        proposal[degenerate] = rows[degenerate]
        normaliser[degenerate] = 1.0
    proposal /= normaliser[:, None]

    weights = state.weights * normaliser
    weights /= weights.sum()
    pi_pos = _normalize(weights @ proposal)

    new_words = sample_rows(proposal, state.rng)
    old_letters = tables.pos_table[state.pos_word]
    new_letters = tables.pos_table[new_words]
    state.word_dwell = np.where(new_words == state.pos_word, state.word_dwell + 1, 1)
    state.letter_dwell = np.where(new_letters == old_letters, state.letter_dwell + 1, 1)
    state.pos_word = new_words
    state.weights = weights

    # letter level
    particle_mix = np.array([
        np.bincount(new_letters[:, v], weights=weights, minlength=tables.n_pos_letters)
        for v in range(n)
    ])
    inter_time = state.letter_posterior @ tables.letter_probs
    pi_letters = _normalize(particle_mix * inter_time, fallback=particle_mix)

    # continuous level
    if state.means is not None:
        for v in range(n):
            letter_velocity = pi_letters[v] @ tables.letter_means_raw[:, 2:4]
            control = state.config.control_gain * (letter_velocity - state.means[v, 2:4])
            process_noise = state.config.process_noise_scale * np.einsum("l,lij->ij", pi_letters[v], tables.letter_covs_raw)
            state.means[v], state.covariances[v] = kalman_predict(
                state.means[v], state.covariances[v], tables.dt, control, process_noise
            )

    # communication level
    from_positions = pi_pos @ tables.phi
    comm_prediction = _normalize(from_positions * (state.comm_belief @ tables.comm_word_probs), fallback=from_positions)
    if tables.geometric and state.means is not None:
        comm_prediction = _geometric_prediction(state, comm_prediction)
    predicted_word = int(np.argmax(comm_prediction))

    snapshot = BeliefSnapshot(
        frame=state.frame,
        pi_word_pos=_with_unknown(pi_pos, tables.unknown_mass),
        pi_word_comm=_with_unknown(comm_prediction, PROBABILITY_FLOOR),
        pi_letters=pi_letters,
        predicted_graph=ConnectivityGraph(n=n, adjacency=tables.comm_adjacency[predicted_word], frame=state.frame),
        tracks=state.tracks(np.argmax(pi_letters, axis=1))
    )
    _check_messages(
        pi_word_pos=snapshot.pi_word_pos,
        pi_word_comm=snapshot.pi_word_comm,
        pi_letters=pi_letters,
        weights=state.weights
    )
    state.pending = snapshot
    return snapshot


def update_step(state: FilterState, observation: FrameObservation, model: ModelBundle = None) -> BeliefSnapshot:
    """
    Bottom-up update with the reported positions and the observed graph.

    Raises:
        DimensionMismatchError: Positions or graph not matching N
        StreamAlignmentError: Observation frame differs from the predicted frame
        FilterStateError: A message or the particle weights stop summing to 1
    """
    tables = state.tables
    n = tables.n_vehicles
    snapshot = state.pending if state.pending is not None else predict_step(state, model)

    positions = np.asarray(observation.positions, dtype=float)
    if positions.shape != (n, 2):
        raise DimensionMismatchError(
            f"Se esperaban posiciones ({n}, 2)",
            details=f"shape={positions.shape}, frame={observation.frame}"
        )
    if observation.frame != snapshot.frame:
        raise StreamAlignmentError(
            f"Observación del frame {observation.frame} cuando se esperaba el frame {snapshot.frame}"
        )

    z = positions - positions.mean(axis=0) if tables.platoon_frame else positions
    if state.means is None:
        state.means = np.hstack([z, np.zeros((n, 2))])
        state.covariances = np.repeat(state.config.prior_covariance * np.eye(4)[None], n, axis=0)
    for v in range(n):
        state.means[v], state.covariances[v] = kalman_update(
            state.means[v], state.covariances[v], z[v], tables.measurement_noise
        )

    # letter diagnostics
    normalized = tables.pos_scaler.transform(state.means)
    lambda_letters = np.empty((n, tables.n_pos_letters))
    for v in range(n):
        covariance = tables.pos_scaler.transform_covariance(state.covariances[v])
        log_lik = gaussian_log_likelihood(
            normalized[v],
            tables.letter_means,
            tables.letter_covs + covariance + COVARIANCE_REGULARIZATION * np.eye(covariance.shape[0])
        )
        lambda_letters[v] = np.exp(log_lik - logsumexp(log_lik))

    # particle weights
    letters = tables.pos_table[state.pos_word]
    with np.errstate(divide="ignore"):
        log_weights = np.log(state.weights) + np.sum(np.log(lambda_letters[np.arange(n), letters]), axis=1)
    total = logsumexp(log_weights)
    weights_reset = not np.isfinite(total)
    if weights_reset:
        logger.warning(f"Frame {snapshot.frame}: all particle weights vanished, reinitialising uniformly")
        state.weights = np.full(state.n_particles, 1.0 / state.n_particles)
        state.n_resets += 1
    else:
        state.weights = np.exp(log_weights - total)

    posterior_pos = np.bincount(state.pos_word, weights=state.weights, minlength=tables.n_pos_words)
    posterior_pos = posterior_pos / posterior_pos.sum()
    posterior_letters = _normalize(snapshot.pi_letters * lambda_letters, fallback=lambda_letters)
    observed_pos = lookup_word(tables.pos_table, np.argmax(lambda_letters, axis=1))
    lambda_pos = word_message(lambda_letters, tables.pos_table, decoded=observed_pos)

    # communication diagnostics
    if observation.graph is None:
        lambda_comm = np.full(tables.n_comm_words + 1, 1.0 / (tables.n_comm_words + 1))
        observed_comm = None
    else:
        if observation.graph.n != n:
            raise DimensionMismatchError(
                f"Grafo de {observation.graph.n} vehículos, se esperaban {n}",
                details=f"frame={observation.frame}"
            )
        adjacency = observation.graph.adjacency.astype(float)
        previous = adjacency if state.prev_adjacency is None else state.prev_adjacency
        raw = np.hstack([adjacency, adjacency - previous])
        decoded = np.argmin(tables.comm_metric.distances(tables.comm_scaler.transform(raw)), axis=1)
        observed_comm = lookup_word(tables.comm_table, decoded)
        responsibilities = letter_responsibilities(
            raw, tables.comm_letters, state.config.responsibility_temperature, metric=tables.comm_patterns
        )
        lambda_comm = word_message(responsibilities, tables.comm_table, decoded=observed_comm)
        state.prev_adjacency = adjacency

    pi_comm = snapshot.pi_word_comm[:-1]
    posterior_comm = _normalize(pi_comm * lambda_comm[:-1], fallback=pi_comm)

    state.letter_posterior = posterior_letters
    state.comm_belief = posterior_comm

    ess = 1.0 / float(np.sum(state.weights ** 2))
    resampled = ess < state.n_particles / 2.0
    if resampled:
        idx = systematic_resample(state.weights, state.rng)
        state.pos_word = state.pos_word[idx]
        state.word_dwell = state.word_dwell[idx]
        state.letter_dwell = state.letter_dwell[idx]
        state.weights = np.full(state.n_particles, 1.0 / state.n_particles)
        state.n_resamples += 1

    completed = replace(
        snapshot,
        tracks=state.tracks(np.argmax(posterior_letters, axis=1)),
        lambda_word_pos=lambda_pos,
        lambda_word_comm=lambda_comm,
        lambda_letters=lambda_letters,
        posterior_word_pos=posterior_pos,
        posterior_word_comm=posterior_comm,
        posterior_letters=posterior_letters,
        observed_word_pos=observed_pos,
        observed_word_comm=observed_comm,
        ess=ess,
        resampled=resampled,
        weights_reset=weights_reset
    )
    _check_messages(
        lambda_word_pos=lambda_pos,
        lambda_word_comm=lambda_comm,
        lambda_letters=lambda_letters,
        posterior_word_pos=posterior_pos,
        posterior_word_comm=posterior_comm,
        posterior_letters=posterior_letters,
        weights=state.weights
    )
    state.pending = None
    state.frame += 1
    return completed


def lookup_word(word_table: np.ndarray, letters: np.ndarray) -> int:
    """Word id of a letter vector, or len(word_table) (UNKNOWN)."""
    matches = np.flatnonzero(np.all(word_table == letters, axis=1))
    return int(matches[0]) if matches.size else int(word_table.shape[0])


def run_sequence(model: ModelBundle, scenario, graphs: Sequence[Optional[ConnectivityGraph]],
                 n_particles: int, seed: int, config: Optional[FilterConfig] = None) -> List[BeliefSnapshot]:
    """
    Alternate predict/update over a whole stream.

    Args:
        model: Trained model bundle
        scenario: Scenario, or a (T, N, 2) array of positions
        graphs: T observed graphs (None where no graph was reported)
        n_particles: P
        seed: Seed of the filter's random stream
        config: Filter settings

    Returns:
        One completed BeliefSnapshot per frame

    Raises:
        StreamAlignmentError: Streams of different lengths
        DimensionMismatchError: Vehicle count differs from the model
    """
    positions = scenario.positions if isinstance(scenario, Scenario) else np.asarray(scenario, dtype=float)
    n_frames = positions.shape[0] if positions.size else 0
    if n_frames != len(graphs):
        raise StreamAlignmentError(
            "Trayectorias y grafos con distinto número de frames",
            details=f"{n_frames} != {len(graphs)}"
        )
    if n_frames == 0:
        return []
    if positions.shape[1] != model.n_vehicles:
        raise DimensionMismatchError(
            f"El modelo fue entrenado con {model.n_vehicles} vehículos; el flujo tiene {positions.shape[1]}"
        )

    state = init_filter(model, n_particles, seed, config)
    snapshots = []
    for t in range(n_frames):
        predict_step(state, model)
        snapshots.append(update_step(state, FrameObservation(frame=t, positions=positions[t], graph=graphs[t]), model))
        if (t + 1) % 500 == 0:
            logger.debug(f"Filtered {t + 1}/{n_frames} frames")

    logger.info(
        f"Filter run: {n_frames} frames, P={n_particles}, seed={seed}, "
        f"resamples={state.n_resamples}, weight resets={state.n_resets}"
    )
    return snapshots


# Word distributions are written sparsely; entries below this are dropped
SNAPSHOT_SUPPORT_FLOOR = 1e-6


def _rounded(vector, digits: int = 6):
    if vector is None:
        return None
    return np.round(np.asarray(vector, dtype=float), digits).tolist()


def _sparse(vector, digits: int = 6):
    """{"size": K, "support": {index: p}} keeping entries >= SNAPSHOT_SUPPORT_FLOOR."""
    if vector is None:
        return None
    vector = np.asarray(vector, dtype=float)
    kept = np.flatnonzero(vector >= SNAPSHOT_SUPPORT_FLOOR)
    return {
        "size": int(vector.size),
        "support": {str(int(i)): round(float(vector[i]), digits) for i in kept},
    }


def snapshot_to_dict(snapshot: BeliefSnapshot) -> dict:
    """JSON-ready form of a snapshot (one line of the snapshot stream)."""
    return {
        "frame": snapshot.frame,
        "pi_word_pos": _sparse(snapshot.pi_word_pos),
        "lambda_word_pos": _sparse(snapshot.lambda_word_pos),
        "pi_word_comm": _sparse(snapshot.pi_word_comm),
        "lambda_word_comm": _sparse(snapshot.lambda_word_comm),
        "posterior_word_pos": _sparse(snapshot.posterior_word_pos),
        "posterior_word_comm": _sparse(snapshot.posterior_word_comm),
        "pi_letters": _rounded(snapshot.pi_letters),
        "lambda_letters": _rounded(snapshot.lambda_letters),
        "predicted_graph": snapshot.predicted_graph.to_bitmap(),
        "observed_word_pos": snapshot.observed_word_pos,
        "observed_word_comm": snapshot.observed_word_comm,
        "tracks": [
            {"vehicle_id": t.vehicle_id, "mean": _rounded(t.mean), "letter": t.letter}
            for t in snapshot.tracks
        ],
        "ess": snapshot.ess,
        "resampled": snapshot.resampled,
        "weights_reset": snapshot.weights_reset,
    }
