"""DTW / interpolated distances, score-level fusion and KNN voting."""

import json
import os
from collections import Counter
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit
from numpy.typing import NDArray

from .config import DISTANCE_MODES, RecognizerConfig
from .errors import DimensionError, FrameIOError, ModelError
from .features import SIGNALS, WordSignature, read_signature, write_signature
from .logging import LoggerManager

WEIGHT_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class FusionWeights:
    """One non-negative weight per signal, in `SIGNALS` order."""

    w: tuple[float, ...] = (1.0,) * len(SIGNALS)

    def __post_init__(self):
        if len(self.w) != len(SIGNALS):
            raise ModelError(f"Expected {len(SIGNALS)} weights, got {len(self.w)}")
        if any(v < 0 for v in self.w) or sum(self.w) <= 0:
            raise ModelError("Weights must be non-negative with a positive sum")

    @classmethod
    def one_hot(cls, signal: str) -> "FusionWeights":
        return cls(tuple(float(s == signal) for s in SIGNALS))

    def as_array(self) -> NDArray[np.float64]:
        return np.asarray(self.w, dtype=np.float64)


@dataclass(frozen=True)
class TrainingIndex:
    """
    The KNN model.

    Attributes:
        examples (tuple): labelled training signatures
        weights (FusionWeights): per-signal fusion weights
        mode (str): "dtw" or "interp"
        k (int): neighbours that vote
        interp_len (int): resample length in "interp" mode
    """

    examples: tuple[WordSignature, ...]
    weights: FusionWeights = field(default_factory=FusionWeights)
    mode: str = "dtw"
    k: int = 5
    interp_len: int = 32

    def __post_init__(self):
        if self.mode not in DISTANCE_MODES:
            raise ModelError(f"Unknown distance mode {self.mode!r}")
        if self.k < 1:
            raise ModelError(f"k must be >= 1, got {self.k}")
        if self.interp_len < 2:
            raise ModelError(f"interp_len must be >= 2, got {self.interp_len}")
        if any(e.label is None for e in self.examples):
            raise ModelError("Every training example needs a label")

    @classmethod
    def from_config(
        cls, examples: Sequence[WordSignature], config: RecognizerConfig
    ) -> "TrainingIndex":
        return cls(
            tuple(examples),
            FusionWeights(tuple(float(w) for w in config.weights)),
            config.distance,
            config.k,
            config.interp_len,
        )

    @property
    def labels(self) -> list[str]:
        return [str(e.label) for e in self.examples]


@dataclass(frozen=True)
class Prediction:
    label: str
    neighbours: tuple[tuple[str, float], ...]
    votes: dict[str, int]

    @property
    def distance(self) -> float:
        return self.neighbours[0][1]


@njit(cache=True)
def _accumulated_cost(a, b):
    n, m = a.shape[0], b.shape[0]
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            step = min(acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1])
            acc[i, j] = abs(a[i - 1] - b[j - 1]) + step
    return acc[n, m]


def dtw_cost(a: Sequence[float], b: Sequence[float]) -> float:
    """Minimum accumulated |a_i - b_j| over monotone warping paths."""

    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise DimensionError("DTW needs two non-empty sequences")
    return float(_accumulated_cost(a, b))


def dtw(a: Sequence[float], b: Sequence[float]) -> float:
    """DTW cost normalized by the summed sequence lengths."""

    return dtw_cost(a, b) / (len(a) + len(b))


def resample_linear(s: Sequence[float], length: int) -> NDArray[np.float64]:
    """Corner-aligned linear resampling; endpoints are kept exactly."""

    s = np.asarray(s, dtype=np.float64)
    if s.size == 0:
        raise DimensionError("Cannot resample an empty sequence")
    if length < 2:
        raise DimensionError(f"Resample length must be >= 2, got {length}")
    if s.size == 1:
        return np.full(length, s[0])
    positions = np.linspace(0.0, s.size - 1, length)
    out = np.interp(positions, np.arange(s.size), s)
    out[0], out[-1] = s[0], s[-1]
    return out


def signal_distance(a, b, mode: str = "dtw", interp_len: int = 32) -> float:
    if mode == "dtw":
        return dtw(a, b)
    if mode == "interp":
        diff = resample_linear(a, interp_len) - resample_linear(b, interp_len)
        return float(np.linalg.norm(diff) / np.sqrt(interp_len))
    raise ModelError(f"Unknown distance mode {mode!r}")


def signal_distances(
    u: WordSignature, v: WordSignature, mode: str = "dtw", interp_len: int = 32
) -> NDArray[np.float64]:
    """The 8 per-signal distances between two signatures."""

    return np.array(
        [
            signal_distance(u.matrix[:, f], v.matrix[:, f], mode, interp_len)
            for f in range(len(SIGNALS))
        ]
    )


def fuse(distances: NDArray[np.float64], weights: FusionWeights) -> NDArray[np.float64]:
    """Weighted mean over the last axis of per-signal distances."""

    w = weights.as_array()
    return distances @ w / w.sum()


def signature_distance(
    u: WordSignature,
    v: WordSignature,
    weights: FusionWeights | None = None,
    mode: str = "dtw",
    interp_len: int = 32,
) -> float:
    weights = weights or FusionWeights()
    return float(fuse(signal_distances(u, v, mode, interp_len), weights))


def _vote(labels: Sequence[str], distances: Sequence[float], k: int) -> Prediction:
    """KNN majority vote with the deterministic tie chain.

    Neighbours are ordered by (distance, label); tied vote counts go to the
    label with the smaller total neighbour distance, then the smaller label.
    """

    order = sorted(range(len(labels)), key=lambda i: (distances[i], labels[i]))[:k]
    neighbours = tuple((labels[i], float(distances[i])) for i in order)
    votes = Counter(label for label, _ in neighbours)
    totals: dict[str, float] = {}
    for label, d in neighbours:
        totals[label] = totals.get(label, 0.0) + d
    best = min(votes, key=lambda label: (-votes[label], totals[label], label))
    return Prediction(best, neighbours, dict(sorted(votes.items())))


def classify(index: TrainingIndex, query: WordSignature) -> Prediction:
    if not index.examples:
        raise ModelError("The training index is empty")
    k = min(index.k, len(index.examples))
    distances = [
        signature_distance(query, e, index.weights, index.mode, index.interp_len)
        for e in index.examples
    ]
    return _vote(index.labels, distances, k)


def distance_matrices(
    examples: Sequence[WordSignature], mode: str = "dtw", interp_len: int = 32
) -> NDArray[np.float64]:
    """Per-signal pairwise distances, shape (n, n, 8)."""

    n = len(examples)
    out = np.zeros((n, n, len(SIGNALS)))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = signal_distances(
                examples[i], examples[j], mode, interp_len
            )
    return out


def leave_one_out_accuracy(
    matrices: NDArray[np.float64], labels: Sequence[str], weights: FusionWeights, k: int
) -> float:
    fused = fuse(matrices, weights)
    n = len(labels)
    k = min(k, n - 1)
    correct = 0
    for i in range(n):
        others = [j for j in range(n) if j != i]
        prediction = _vote([labels[j] for j in others], fused[i, others], k)
        correct += prediction.label == labels[i]
    return correct / n


def tune_weights(index: TrainingIndex) -> FusionWeights:
    """Coordinate grid search of the weights maximizing leave-one-out accuracy.

    Starts from uniform weights and scans H, W, M, Q, R, ER, RC, T once,
    trying each grid value per signal; only strict improvements are kept.
    """

    counts = Counter(index.labels)
    if not counts or min(counts.values()) < 2:
        raise ModelError("Weight tuning needs at least 2 examples of every word")
    logger = LoggerManager.get_logger()
    matrices = distance_matrices(index.examples, index.mode, index.interp_len)
    best = list(FusionWeights().w)
    best_score = leave_one_out_accuracy(matrices, index.labels, FusionWeights(), index.k)
    for f, value in product(range(len(SIGNALS)), WEIGHT_GRID):
        candidate = best.copy()
        candidate[f] = value
        if sum(candidate) <= 0 or candidate == best:
            continue
        score = leave_one_out_accuracy(
            matrices, index.labels, FusionWeights(tuple(candidate)), index.k
        )
        if score > best_score:
            logger.debug(
                f"Weight {SIGNALS[f]}={value} lifts leave-one-out accuracy "
                f"{best_score:.4f} -> {score:.4f}"
            )
            best, best_score = candidate, score
    return FusionWeights(tuple(best))


def tuned(index: TrainingIndex) -> TrainingIndex:
    return replace(index, weights=tune_weights(index))


INDEX_FILE = "index.json"


def save_index(index: TrainingIndex, model_dir: str | os.PathLike) -> None:
    """Write `index.json` plus one signature CSV per training example."""

    directory = Path(model_dir)
    files = [f"example_{i:05d}.csv" for i in range(len(index.examples))]
    payload = {
        "mode": index.mode,
        "k": index.k,
        "weights": list(index.weights.w),
        "interp_len": index.interp_len,
        "examples": files,
    }
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for name, example in zip(files, index.examples):
            write_signature(example, directory / name)
        with open(directory / INDEX_FILE, "w") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    except OSError as e:
        raise FrameIOError(f"Cannot write model {directory}: {e}") from e


def load_index(model_dir: str | os.PathLike) -> TrainingIndex:
    directory = Path(model_dir)
    try:
        with open(directory / INDEX_FILE) as f:
            payload = json.load(f)
    except FileNotFoundError as e:
        raise ModelError(f"No {INDEX_FILE} in {directory}") from e
    except (OSError, json.JSONDecodeError) as e:
        raise ModelError(f"Cannot read model {directory}: {e}") from e
    try:
        examples = tuple(read_signature(directory / name) for name in payload["examples"])
        return TrainingIndex(
            examples,
            FusionWeights(tuple(float(w) for w in payload["weights"])),
            payload["mode"],
            int(payload["k"]),
            int(payload["interp_len"]),
        )
    except KeyError as e:
        raise ModelError(f"Model {directory} lacks the field {e}") from e
