# core/vocabulary.py
"""
Per-modality dictionaries and transition statistics.

Letters are assigned per vehicle and frame; the time-synchronised N-tuple of
letters forms a word. Word and letter transitions are counted into
row-stochastic matrices, optionally conditioned on the dwell time tau spent in
the source state, and the co-occurrence of positional and communication words
gives the interaction matrix Phi.
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from constants import (
    MODALITIES,
    MODALITY_COMMUNICATION,
    SINGULAR_EIGENVALUE_FLOOR,
    STOCHASTIC_TOLERANCE,
    UNKNOWN_WORD
)
from core.errdyn import Letter, FeatureScaler
from core.exceptions import (
    CorruptModelError,
    DimensionMismatchError,
    InsufficientDataError,
    ParameterError
)
from utils.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class Word:
    """N-tuple of letter ids in vehicle order."""
    id: int
    letters: Tuple[int, ...]
    modality: str

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(l) for l in self.letters))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Word):
            return NotImplemented
        return self.modality == other.modality and self.letters == other.letters

    def __hash__(self) -> int:
        return hash((self.modality, self.letters))


@dataclass
class Dictionary:
    """
    Learned letters and words of one modality.

    Attributes:
        modality: positional or communication
        letters: Gaussian letters in normalized feature space
        words: Words with ids 0..W-1
        scaler: Feature standardiser used to build the letters
        word_adjacency: For communication words, the modal adjacency matrix
            seen with each word during training
    """
    modality: str
    letters: List[Letter]
    words: List[Word]
    scaler: Optional[FeatureScaler] = None
    word_adjacency: Optional[List[np.ndarray]] = None
    word_index: Dict[Tuple[int, ...], int] = field(init=False, repr=False)

    def __post_init__(self):
        n_letters = len(self.letters)
        self.word_index = {}
        for position, word in enumerate(self.words):
            if word.id != position:
                raise ParameterError(f"Ids de palabra no consecutivos en {self.modality}", details=f"{word.id} != {position}")
            if any(l < 0 or l >= n_letters for l in word.letters):
                raise ParameterError(
                    f"La palabra {word.id} referencia letras inexistentes",
                    details=f"letters={word.letters}, L={n_letters}"
                )
            if word.letters in self.word_index:
                raise ParameterError(f"Palabra duplicada en {self.modality}: {word.letters}")
            self.word_index[word.letters] = word.id
        if self.word_adjacency is not None:
            self.word_adjacency = [np.asarray(a, dtype=np.uint8) for a in self.word_adjacency]
            if len(self.word_adjacency) != len(self.words):
                raise ParameterError("Una adyacencia por palabra es requerida")

    @property
    def n_letters(self) -> int:
        return len(self.letters)

    @property
    def n_words(self) -> int:
        return len(self.words)

    def lookup(self, letters: Sequence[int]) -> Optional[int]:
        """Word id of a letter vector, None when out of dictionary."""
        return self.word_index.get(tuple(int(l) for l in letters))

    def word_table(self) -> np.ndarray:
        """(W, N) array of the letter ids of every word."""
        return np.array([w.letters for w in self.words], dtype=np.int64)

    def to_dict(self) -> dict:
        data = {
            "modality": self.modality,
            "letters": [letter.to_dict() for letter in self.letters],
            "words": [list(w.letters) for w in self.words],
            "scaler": self.scaler.to_dict() if self.scaler is not None else None,
        }
        if self.word_adjacency is not None:
            data["word_adjacency"] = [
                ["".join(str(int(v)) for v in row) for row in adjacency]
                for adjacency in self.word_adjacency
            ]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Dictionary":
        modality = data["modality"]
        adjacency = data.get("word_adjacency")
        if adjacency is not None:
            adjacency = [np.array([[int(c) for c in row] for row in rows], dtype=np.uint8) for rows in adjacency]
        return cls(
            modality=modality,
            letters=[Letter.from_dict(item) for item in data["letters"]],
            words=[Word(id=i, letters=tuple(letters), modality=modality) for i, letters in enumerate(data["words"])],
            scaler=FeatureScaler.from_dict(data["scaler"]) if data.get("scaler") else None,
            word_adjacency=adjacency
        )


class LetterMetric:
    """
    Squared distances from feature vectors to every letter.

    Mahalanobis under the letter covariance, Euclidean for letters whose
    covariance has an eigenvalue below the singularity floor.
    """

    def __init__(self, letters: Sequence[Letter], eigenvalue_floor: float = SINGULAR_EIGENVALUE_FLOOR):
        if not letters:
            raise ParameterError("Se requiere al menos una letra")
        self.means = np.array([letter.mean for letter in letters])
        dim = self.means.shape[1]
        precisions = []
        self.euclidean = []
        for letter in letters:
            if np.linalg.eigvalsh(letter.covariance).min() < eigenvalue_floor:
                precisions.append(np.eye(dim))
                self.euclidean.append(letter.id)
            else:
                precisions.append(np.linalg.inv(letter.covariance))
        self.precisions = np.array(precisions)

    def distances(self, features: np.ndarray) -> np.ndarray:
        """
        Args:
            features: (..., D) normalized features

        Returns:
            (..., L) squared distances
        """
        diff = np.asarray(features, dtype=float)[..., None, :] - self.means
        return np.einsum("...li,lij,...lj->...l", diff, self.precisions, diff)


class PatternMetric:
    """
    Squared Euclidean distances to letter means in raw feature units.

    For binary adjacency patterns this counts mismatching entries, which
    stays meaningful for features the scaler inflates (rare edge changes).
    """

    def __init__(self, letters: Sequence[Letter], scaler: Optional[FeatureScaler] = None):
        if not letters:
            raise ParameterError("Se requiere al menos una letra")
        means = np.array([letter.mean for letter in letters])
        self.means = means if scaler is None else scaler.inverse_transform(means)

    def distances(self, features: np.ndarray) -> np.ndarray:
        """(..., D) raw features -> (..., L) squared distances."""
        diff = np.asarray(features, dtype=float)[..., None, :] - self.means
        return np.einsum("...li,...li->...l", diff, diff)


def letterize(features: np.ndarray, letters: Sequence[Letter]) -> np.ndarray:
    """
    Nearest letter of every vehicle at every frame.

    Args:
        features: (T, N, D) normalized generalized states
        letters: Letters of the modality

    Returns:
        (T, N) letter ids; ties go to the lowest letter id
    """
    metric = LetterMetric(letters)
    return np.argmin(metric.distances(features), axis=-1)


def letter_responsibilities(features: np.ndarray, letters: Sequence[Letter], temperature: float = 1.0,
                            metric=None) -> np.ndarray:
    """
    Soft letter assignment: r(l) proportional to exp(-d^2(l) / (2 temperature)).

    The metric defaults to LetterMetric; any object with distances() works.

    Returns:
        (..., L) array normalized over the last axis
    """
    if temperature <= 0:
        raise ParameterError(f"La temperatura debe ser positiva: {temperature}")
    metric = metric or LetterMetric(letters)
    return softmax(-metric.distances(features) / (2.0 * temperature), axis=-1)


def word_message(letter_probs: np.ndarray, word_table: np.ndarray, decoded: Optional[int] = None) -> np.ndarray:
    """
    Distribution over dictionary words plus UNKNOWN from per-vehicle letter
    distributions.

    Args:
        letter_probs: (N, L) rows summing to 1
        word_table: (W, N) letter ids of the dictionary words
        decoded: Hard-decoded word of the frame (W for UNKNOWN). A decode
            inside the dictionary confines the message to the dictionary;
            None or UNKNOWN leaves the out-of-dictionary mass on UNKNOWN.

    Returns:
        (W + 1,) vector; w -> prod_n letter_probs[n, w_n], last entry is the
        mass of letter combinations outside the dictionary
    """
    n = letter_probs.shape[0]
    n_words = word_table.shape[0]
    if n_words:
        mass = np.prod(letter_probs[np.arange(n), word_table], axis=1)
    else:
        mass = np.zeros(0)

    if decoded is not None and 0 <= decoded < n_words:
        message = np.append(mass, 0.0)
        if message.sum() <= 0:
            message[decoded] = 1.0
        return message / message.sum()

    unknown = max(0.0, 1.0 - float(mass.sum()))
    message = np.append(mass, unknown)
    return message / message.sum()


def build_words(letter_frames, modality: str = MODALITIES[0]) -> Tuple[List[Word], np.ndarray]:
    """
    Enumerate the distinct letter vectors in first-appearance order.

    Args:
        letter_frames: (T, N) letter ids
        modality: Modality tag of the words

    Returns:
        (words, series) with series[t] the word id of frame t
    """
    frames = np.asarray(letter_frames, dtype=np.int64)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise InsufficientDataError("Se requiere al menos un frame de letras", details=str(frames.shape))

    index: Dict[Tuple[int, ...], int] = {}
    series = np.empty(frames.shape[0], dtype=np.int64)
    for t, row in enumerate(frames):
        key = tuple(row.tolist())
        if key not in index:
            index[key] = len(index)
        series[t] = index[key]
    words = [Word(id=i, letters=key, modality=modality) for key, i in index.items()]
    logger.info(f"{modality}: {len(words)} words over {frames.shape[0]} frames")
    return words, series


def modal_word_adjacency(series: np.ndarray, adjacency: np.ndarray, n_words: int) -> List[np.ndarray]:
    """
    Most frequent adjacency matrix observed with each word (ties: first seen).

    Args:
        series: (T,) word ids
        adjacency: (T, N, N) adjacency stream aligned with series
        n_words: Dictionary size
    """
    counters = [Counter() for _ in range(n_words)]
    examples: Dict[Tuple[int, bytes], np.ndarray] = {}
    for word, matrix in zip(series, np.asarray(adjacency, dtype=np.uint8)):
        key = matrix.tobytes()
        counters[word][key] += 1
        examples.setdefault((int(word), key), matrix)
    result = []
    for word, counter in enumerate(counters):
        # Counter.most_common keeps insertion order among equal counts
        key, _ = counter.most_common(1)[0]
        result.append(np.array(examples[(word, key)]))
    return result


def dwell_times(series: np.ndarray) -> np.ndarray:
    """Frames spent in the current state, counting the current frame."""
    series = np.asarray(series)
    tau = np.ones(len(series), dtype=np.int64)
    for t in range(1, len(series)):
        if series[t] == series[t - 1]:
            tau[t] = tau[t - 1] + 1
    return tau


def _normalize_rows(counts: np.ndarray, smoothing: float) -> np.ndarray:
    dim = counts.shape[-1]
    totals = counts.sum(axis=-1, keepdims=True)
    denominator = totals + dim * smoothing
    safe = np.where(denominator > 0, denominator, 1.0)
    return np.where(denominator > 0, (counts + smoothing) / safe, 1.0 / dim)


@dataclass
class TransitionMatrix:
    """
    Row-stochastic transition matrix probs[j, i] = P(i | j).

    With tau_bin_edges, tau_probs[b] is the matrix for source dwell times in
    bin b; rows of a bin never observed fall back to the unconditioned row.
    """
    dim: int
    counts: np.ndarray
    probs: np.ndarray
    smoothing: float = 0.0
    tau_bin_edges: Optional[Tuple[int, ...]] = None
    tau_counts: Optional[np.ndarray] = None
    tau_probs: Optional[np.ndarray] = None

    @classmethod
    def from_counts(cls, counts: np.ndarray, smoothing: float, tau_bin_edges=None,
                    tau_counts: np.ndarray = None) -> "TransitionMatrix":
        counts = np.asarray(counts, dtype=np.int64)
        probs = _normalize_rows(counts, smoothing)
        tau_probs = None
        if tau_bin_edges is not None:
            tau_counts = np.asarray(tau_counts, dtype=np.int64)
            tau_probs = _normalize_rows(tau_counts, smoothing)
            unseen = tau_counts.sum(axis=-1) == 0
            tau_probs[unseen] = np.broadcast_to(probs, tau_probs.shape)[unseen]
            tau_bin_edges = tuple(int(e) for e in tau_bin_edges)
        return cls(
            dim=counts.shape[0],
            counts=counts,
            probs=probs,
            smoothing=float(smoothing),
            tau_bin_edges=tau_bin_edges,
            tau_counts=tau_counts,
            tau_probs=tau_probs
        )

    def bin_of(self, tau):
        """Dwell-time bin index (vectorised)."""
        return np.searchsorted(np.asarray(self.tau_bin_edges), tau, side="right")

    def row(self, j: int, tau: Optional[int] = None) -> np.ndarray:
        """Distribution of the next state given source j and its dwell time."""
        if tau is None or self.tau_probs is None:
            return self.probs[j]
        return self.tau_probs[self.bin_of(tau), j]

    def binned(self) -> np.ndarray:
        """(B, dim, dim) matrices; B == 1 without tau conditioning."""
        if self.tau_probs is None:
            return self.probs[None]
        return self.tau_probs

    def propagate(self, distribution: np.ndarray) -> np.ndarray:
        """One unconditioned step: distribution @ probs."""
        return np.asarray(distribution) @ self.probs

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "smoothing": self.smoothing,
            "counts": self.counts.tolist(),
            "probs": self.probs.tolist(),
            "tau_bin_edges": list(self.tau_bin_edges) if self.tau_bin_edges is not None else None,
            "tau_counts": self.tau_counts.tolist() if self.tau_counts is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TransitionMatrix":
        matrix = cls.from_counts(
            np.asarray(data["counts"], dtype=np.int64).reshape(data["dim"], data["dim"]),
            data["smoothing"],
            data.get("tau_bin_edges"),
            data.get("tau_counts")
        )
        stored = np.asarray(data["probs"], dtype=float)
        if stored.shape != matrix.probs.shape or not np.allclose(stored, matrix.probs, atol=STOCHASTIC_TOLERANCE):
            raise CorruptModelError("Las probabilidades de transición no corresponden a sus conteos")
        check_row_stochastic(stored, "transition")
        return matrix


def check_row_stochastic(probs: np.ndarray, name: str, error=CorruptModelError) -> None:
    """Raise `error` (CorruptModelError by default) unless every row is a distribution."""
    probs = np.asarray(probs, dtype=float)
    if probs.size and (np.any(probs < 0) or not np.allclose(probs.sum(axis=-1), 1.0, atol=STOCHASTIC_TOLERANCE)):
        sums = np.atleast_1d(probs.sum(axis=-1)).ravel()
        raise error(f"La matriz '{name}' no es estocástica por filas", details=f"sumas={sums[:8].tolist()}")


def _check_ids(series: np.ndarray, dim: int) -> None:
    if series.size and (series.min() < 0 or series.max() >= dim):
        raise ParameterError(
            f"Identificador fuera de rango para dim={dim}",
            details=f"min={series.min()}, max={series.max()}"
        )


def _count_transitions(series: np.ndarray, dim: int, tau_bin_edges) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    counts = np.zeros((dim, dim), dtype=np.int64)
    np.add.at(counts, (series[:-1], series[1:]), 1)
    tau_counts = None
    if tau_bin_edges is not None:
        bins = np.searchsorted(np.asarray(tau_bin_edges), dwell_times(series)[:-1], side="right")
        tau_counts = np.zeros((len(tau_bin_edges) + 1, dim, dim), dtype=np.int64)
        np.add.at(tau_counts, (bins, series[:-1], series[1:]), 1)
    return counts, tau_counts


def learn_transitions(series, dim: int, smoothing: float, tau_bin_edges=None) -> TransitionMatrix:
    """
    Transition statistics of one id sequence.

    Args:
        series: Sequence of ids in [0, dim)
        dim: Number of states
        smoothing: Additive smoothing per entry
        tau_bin_edges: Dwell-time bin edges, e.g. [3, 6] for {1-2, 3-5, 6+}

    Returns:
        TransitionMatrix with probs[j] = (counts[j] + s) / (total_j + dim * s)

    Raises:
        InsufficientDataError: Fewer than 2 elements
        ParameterError: Id outside [0, dim)
    """
    series = np.asarray(series, dtype=np.int64)
    if series.shape[0] < 2:
        raise InsufficientDataError("Se requieren al menos 2 elementos para aprender transiciones")
    _check_ids(series, dim)
    counts, tau_counts = _count_transitions(series, dim, tau_bin_edges)
    return TransitionMatrix.from_counts(counts, smoothing, tau_bin_edges, tau_counts)


def learn_letter_transitions(letter_frames, dim: int, smoothing: float, tau_bin_edges=None) -> TransitionMatrix:
    """Letter transitions pooled over the per-vehicle letter sequences of (T, N) frames."""
    frames = np.asarray(letter_frames, dtype=np.int64)
    if frames.ndim != 2 or frames.shape[0] < 2:
        raise InsufficientDataError("Se requieren al menos 2 frames de letras")
    _check_ids(frames, dim)
    counts = np.zeros((dim, dim), dtype=np.int64)
    tau_counts = None if tau_bin_edges is None else np.zeros((len(tau_bin_edges) + 1, dim, dim), dtype=np.int64)
    for n in range(frames.shape[1]):
        vehicle_counts, vehicle_tau = _count_transitions(frames[:, n], dim, tau_bin_edges)
        counts += vehicle_counts
        if tau_counts is not None:
            tau_counts += vehicle_tau
    return TransitionMatrix.from_counts(counts, smoothing, tau_bin_edges, tau_counts)


@dataclass
class InteractionMatrix:
    """Phi[p, c] = P(communication word c | positional word p)."""
    rows: int
    cols: int
    counts: np.ndarray
    probs: np.ndarray
    smoothing: float = 0.0

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "smoothing": self.smoothing,
            "counts": self.counts.tolist(),
            "probs": self.probs.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InteractionMatrix":
        counts = np.asarray(data["counts"], dtype=np.int64).reshape(data["rows"], data["cols"])
        probs = np.asarray(data["probs"], dtype=float).reshape(data["rows"], data["cols"])
        check_row_stochastic(probs, "interaction")
        return cls(rows=data["rows"], cols=data["cols"], counts=counts, probs=probs,
                   smoothing=float(data["smoothing"]))


def learn_interaction(pos_word_series, comm_word_series, dims: Tuple[int, int],
                      smoothing: float) -> InteractionMatrix:
    """
    Co-occurrence coupling of positional and communication words.

    Raises:
        DimensionMismatchError: If the series lengths differ
    """
    pos = np.asarray(pos_word_series, dtype=np.int64)
    comm = np.asarray(comm_word_series, dtype=np.int64)
    if pos.shape != comm.shape:
        raise DimensionMismatchError(
            "Las series de palabras no están sincronizadas",
            details=f"{pos.shape} != {comm.shape}"
        )
    if pos.size == 0:
        raise InsufficientDataError("Series de palabras vacías")
    rows, cols = dims
    _check_ids(pos, rows)
    _check_ids(comm, cols)
    counts = np.zeros((rows, cols), dtype=np.int64)
    np.add.at(counts, (pos, comm), 1)
    return InteractionMatrix(rows=rows, cols=cols, counts=counts,
                             probs=_normalize_rows(counts, smoothing), smoothing=float(smoothing))


@dataclass
class ModelBundle:
    """
    Everything the filter and the detector need, as learned from a clean run.

    Attributes:
        version: Model format version
        fingerprint: SHA-256 of the training configuration
        config: Training configuration sections
        dt: Seconds per frame of the training scenario
        n_vehicles: N
        platoon_frame: Positional features are relative to the platoon centroid
        dictionaries: Dictionary per modality
        word_transitions: Word-level Pi_tau per modality
        letter_transitions: Letter-level Pi_tau per modality
        interaction: Phi
        calibration: Per modality {"trace", "mean", "std", "phi", "threshold"}
        null_force: Per modality null-force error statistics
    """
    version: str
    fingerprint: str
    config: dict
    dt: float
    n_vehicles: int
    platoon_frame: bool
    dictionaries: Dict[str, Dictionary]
    word_transitions: Dict[str, TransitionMatrix]
    letter_transitions: Dict[str, TransitionMatrix]
    interaction: InteractionMatrix
    calibration: Dict[str, dict] = field(default_factory=dict)
    null_force: Dict[str, dict] = field(default_factory=dict)

    def __post_init__(self):
        for modality in MODALITIES:
            if modality not in self.dictionaries:
                raise ParameterError(f"Falta el diccionario de la modalidad '{modality}'")
            dictionary = self.dictionaries[modality]
            if self.word_transitions[modality].dim != dictionary.n_words:
                raise ParameterError(f"Dimensión de transiciones de palabras incoherente en '{modality}'")
            if self.letter_transitions[modality].dim != dictionary.n_letters:
                raise ParameterError(f"Dimensión de transiciones de letras incoherente en '{modality}'")
        if (self.interaction.rows, self.interaction.cols) != (
                self.dictionaries[MODALITIES[0]].n_words, self.dictionaries[MODALITY_COMMUNICATION].n_words):
            raise ParameterError("Dimensiones de la matriz de interacción incoherentes")
        if self.dictionaries[MODALITY_COMMUNICATION].word_adjacency is None:
            raise ParameterError("Las palabras de comunicación requieren su adyacencia")

    def word_labels(self, modality: str) -> List[str]:
        """Column labels of word distributions (ids plus UNKNOWN)."""
        return [str(w.id) for w in self.dictionaries[modality].words] + [UNKNOWN_WORD]

    def threshold(self, modality: str) -> float:
        return float(self.calibration[modality]["threshold"])

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "fingerprint": self.fingerprint,
            "config": self.config,
            "dt": self.dt,
            "n_vehicles": self.n_vehicles,
            "platoon_frame": self.platoon_frame,
            "dictionaries": {m: d.to_dict() for m, d in self.dictionaries.items()},
            "word_transitions": {m: t.to_dict() for m, t in self.word_transitions.items()},
            "letter_transitions": {m: t.to_dict() for m, t in self.letter_transitions.items()},
            "interaction": self.interaction.to_dict(),
            "calibration": self.calibration,
            "null_force": self.null_force,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelBundle":
        return cls(
            version=data["version"],
            fingerprint=data["fingerprint"],
            config=data["config"],
            dt=float(data["dt"]),
            n_vehicles=int(data["n_vehicles"]),
            platoon_frame=bool(data["platoon_frame"]),
            dictionaries={m: Dictionary.from_dict(d) for m, d in data["dictionaries"].items()},
            word_transitions={m: TransitionMatrix.from_dict(t) for m, t in data["word_transitions"].items()},
            letter_transitions={m: TransitionMatrix.from_dict(t) for m, t in data["letter_transitions"].items()},
            interaction=InteractionMatrix.from_dict(data["interaction"]),
            calibration=data.get("calibration", {}),
            null_force=data.get("null_force", {})
        )
