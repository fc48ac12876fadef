"""Decision-list base learners: count statistics, parameter updates, predictions.

Parameters ``theta`` are a ``(num_features, L)`` row-stochastic array where
row ``f`` is p(label | f). Hard labelings are integer arrays with ``-1`` for
unlabeled instances.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .distributions import uniform
from .graph import BipartiteGraph

UNLABELED = -1


class LearnerKind(str, enum.Enum):
    DL0 = "dl0"  # max-score prediction, smoothed precision
    DL1 = "dl1"  # mean prediction, per-feature smoothing by unlabeled mass
    DL1R = "dl1r"  # mean prediction, raw precision
    DL2S = "dl2s"  # product prediction, delta-smoothed precision


@dataclass(frozen=True)
class SmoothingConfig:
    epsilon: float = 0.1
    delta: float = 1.0

    def __post_init__(self):
        if self.epsilon < 0 or self.delta < 0:
            raise ValueError("smoothing parameters must be non-negative")


@dataclass(frozen=True)
class CountStats:
    """Per-feature counts against the current hard labels.

    ``lambda_fj`` has shape ``(..., L)`` and ``v_f`` the matching leading
    shape, so the same object describes one feature or all of them.
    """

    lambda_fj: np.ndarray
    v_f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lambda_fj", np.asarray(self.lambda_fj, dtype=float))
        object.__setattr__(self, "v_f", np.asarray(self.v_f, dtype=float))
        if np.any(self.lambda_fj < 0) or np.any(self.v_f < 0):
            raise ValueError("counts must be non-negative")

    @property
    def num_labels(self) -> int:
        return self.lambda_fj.shape[-1]

    @property
    def lambda_f(self) -> np.ndarray:
        return self.lambda_fj.sum(axis=-1)

    @property
    def x_f(self) -> np.ndarray:
        return self.lambda_f + self.v_f


def _hard_labels(labels) -> np.ndarray:
    # accepts a LabelingState or a bare label array
    return np.asarray(getattr(labels, "labels", labels))


def all_count_stats(graph: BipartiteGraph, labels: np.ndarray) -> CountStats:
    """Counts for every feature at once; row ``f`` equals ``count_stats(graph, labels, f)``."""
    labels = _hard_labels(labels)
    ex, ef = graph.edge_instance, graph.edge_feature
    edge_labels = labels[ex]
    hit = edge_labels != UNLABELED
    lam = np.zeros((graph.num_features, graph.num_labels))
    np.add.at(lam, (ef[hit], edge_labels[hit]), 1.0)
    v = np.bincount(ef[~hit], minlength=graph.num_features).astype(float)
    return CountStats(lam, v)


def count_stats(graph: BipartiteGraph, labels, f: int) -> CountStats:
    labels = _hard_labels(labels)
    lam = np.zeros(graph.num_labels)
    v = 0
    for x in graph.instances_of[f]:
        if labels[x] == UNLABELED:
            v += 1
        else:
            lam[labels[x]] += 1
    return CountStats(lam, np.float64(v))


def _fallback_uniform(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # rows with a zero denominator become uniform
    den = np.asarray(den, dtype=float)[..., None]
    L = num.shape[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    return np.where(den > 0, out, 1.0 / L)


def raw_precision(stats: CountStats) -> np.ndarray:
    """``|Λ_fj| / |Λ_f|``; uniform for features with no labeled neighbor."""
    return _fallback_uniform(stats.lambda_fj, stats.lambda_f)


def smoothed_precision(stats: CountStats, epsilon: float, num_labels: int | None = None) -> np.ndarray:
    L = num_labels or stats.num_labels
    return _fallback_uniform(stats.lambda_fj + epsilon, stats.lambda_f + L * epsilon)


def dl1_update(stats: CountStats, num_labels: int | None = None) -> np.ndarray:
    L = num_labels or stats.num_labels
    v = stats.v_f[..., None]
    return _fallback_uniform(stats.lambda_fj + v / L, stats.lambda_f + stats.v_f)


def dl2s_update(stats: CountStats, delta: float, num_labels: int | None = None) -> np.ndarray:
    L = num_labels or stats.num_labels
    extra = stats.v_f + delta * stats.x_f
    return _fallback_uniform(stats.lambda_fj + extra[..., None] / L, stats.lambda_f + extra)


def train(kind: LearnerKind, graph: BipartiteGraph, labels: np.ndarray, smoothing: SmoothingConfig) -> np.ndarray:
    """Fit ``theta`` for every feature from the current hard labels."""
    stats = all_count_stats(graph, labels)
    kind = LearnerKind(kind)
    if kind is LearnerKind.DL0:
        return smoothed_precision(stats, smoothing.epsilon)
    if kind is LearnerKind.DL1R:
        return raw_precision(stats)
    if kind is LearnerKind.DL1:
        return dl1_update(stats)
    return dl2s_update(stats, smoothing.delta)


# Per-instance predictions. These follow the definitions literally and double
# as a reference for the batched versions below.


def predict_dl0(theta: np.ndarray, graph: BipartiteGraph, x: int) -> np.ndarray:
    scores = np.max(theta[list(graph.features_of[x])], axis=0)
    total = scores.sum()
    if total <= 0:
        return uniform(theta.shape[1])
    return scores / total


def predict_dl1(theta: np.ndarray, graph: BipartiteGraph, x: int) -> np.ndarray:
    return np.mean(theta[list(graph.features_of[x])], axis=0)


def predict_dl2(theta: np.ndarray, graph: BipartiteGraph, x: int) -> tuple[np.ndarray, float]:
    """Normalized product of the feature rows; also returns the normalizer ``Z_x``."""
    rows = theta[list(graph.features_of[x])]
    with np.errstate(divide="ignore"):
        logu = np.log(rows).sum(axis=0)
    top = logu.max()
    if top == -np.inf:
        return uniform(theta.shape[1]), 0.0
    w = np.exp(logu - top)
    return w / w.sum(), float(np.exp(top + np.log(w.sum())))


def predict_all(kind: LearnerKind, theta: np.ndarray, graph: BipartiteGraph) -> tuple[np.ndarray, np.ndarray | None]:
    """Prediction distributions for every instance, shape ``(N, L)``.

    The second element is the per-instance normalizer ``Z_x`` for DL-2 style
    products and ``None`` otherwise.
    """
    kind = LearnerKind(kind)
    N, L = graph.num_instances, graph.num_labels
    ex, ef = graph.edge_instance, graph.edge_feature
    if kind in (LearnerKind.DL1, LearnerKind.DL1R):
        acc = np.zeros((N, L))
        np.add.at(acc, ex, theta[ef])
        return acc / graph.instance_degree[:, None], None
    if kind is LearnerKind.DL0:
        acc = np.zeros((N, L))
        np.maximum.at(acc, ex, theta[ef])
        return _fallback_uniform(acc, acc.sum(axis=1)), None
    with np.errstate(divide="ignore"):
        logt = np.log(theta)
    logu = np.zeros((N, L))
    np.add.at(logu, ex, logt[ef])
    top = logu.max(axis=1)
    dead = top == -np.inf
    w = np.exp(logu - np.where(dead, 0.0, top)[:, None])
    s = w.sum(axis=1)
    pi = np.where(dead[:, None], 1.0 / L, w / np.where(dead, 1.0, s)[:, None])
    with np.errstate(divide="ignore"):
        z = np.where(dead, 0.0, np.exp(top + np.log(np.where(dead, 1.0, s))))
    return pi, z
