"""The modified Yarowsky driver: alternate parameter training and relabeling."""

from __future__ import annotations

import json
import math
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from .graph import BipartiteGraph, SeedLabels
from .learners import UNLABELED, LearnerKind, SmoothingConfig, predict_all, train
from .objectives import objective_H, objective_K_delta, objective_K_t2, objective_l_t2

# Absorbs rounding in averaged/normalized predictions; exact ties (e.g. a
# uniform prediction) must not clear the 1/L threshold or win an argmax.
TIE_TOL = 1e-12

TRACE_OBJECTIVES = ("H", "l_t2", "K_t2", "K_delta")

DEFAULT_OBJECTIVES = {
    LearnerKind.DL0: ("H", "l_t2", "K_t2"),
    LearnerKind.DL1: ("H", "l_t2", "K_t2"),
    LearnerKind.DL1R: ("H", "l_t2", "K_t2"),
    LearnerKind.DL2S: ("H", "K_delta"),
}


@dataclass(frozen=True, eq=False)
class LabelingState:
    """Hard labels (``-1`` = unlabeled) plus the frozen seed set.

    The labeling distributions ``phi`` are derived: a point mass for a
    labeled instance, uniform for an unlabeled one.
    """

    labels: np.ndarray
    seeds: SeedLabels
    num_labels: int

    @classmethod
    def initial(cls, graph: BipartiteGraph, seeds: SeedLabels) -> "LabelingState":
        seeds.validate(graph)
        return cls(seeds.label_array(graph.num_instances), seeds, graph.num_labels)

    @property
    def phi(self) -> np.ndarray:
        L = self.num_labels
        phi = np.full((self.labels.size, L), 1.0 / L)
        hit = self.labels != UNLABELED
        phi[hit] = 0.0
        phi[np.flatnonzero(hit), self.labels[hit]] = 1.0
        return phi

    @property
    def labeled(self) -> np.ndarray:
        return self.labels != UNLABELED

    @property
    def num_labeled(self) -> int:
        return int(np.count_nonzero(self.labeled))


def choose_label(pi: np.ndarray) -> np.ndarray:
    """Row-wise argmax with ties (up to rounding) going to the lowest label index."""
    pi = np.atleast_2d(pi)
    top = pi.max(axis=1, keepdims=True)
    return np.argmax(pi >= top - TIE_TOL, axis=1)


def relabel_step(state: LabelingState, predictions: np.ndarray) -> LabelingState:
    """One relabeling pass.

    Seeds keep their label; previously labeled instances take the predicted
    label unconditionally; unlabeled ones are labeled only when the top
    prediction strictly exceeds 1/L.
    """
    pi = np.asarray(predictions, dtype=float)
    L = state.num_labels
    y_hat = choose_label(pi)
    confident = pi[np.arange(pi.shape[0]), y_hat] > 1.0 / L + TIE_TOL
    labels = np.where(state.labeled | confident, y_hat, UNLABELED)
    seeded = state.seeds.mask(labels.size)
    labels[seeded] = state.seeds.label_array(labels.size)[seeded]
    return LabelingState(labels.astype(np.int64), state.seeds, L)


@dataclass
class IterationRecord:
    t: int
    labeled: int
    changed: int
    objectives: dict[str, float | None]
    after_update: dict[str, float | None]
    stop: str | None = None

    def to_dict(self) -> dict:
        d = {"t": self.t, "labeled": self.labeled, "changed": self.changed}
        for name in TRACE_OBJECTIVES:
            d[name] = _encode(self.objectives.get(name))
        d["after_update"] = {k: _encode(v) for k, v in self.after_update.items()}
        d["stop"] = self.stop
        return d


def _encode(value):
    if value is not None and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


@dataclass
class IterationTrace:
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def stop_reason(self) -> str | None:
        return self.records[-1].stop if self.records else None

    def half_steps(self, name: str) -> list[float]:
        """Objective values in evaluation order: post-update, post-relabel, post-update, ..."""
        out = []
        for r in self.records:
            out.append(r.after_update[name])
            out.append(r.objectives[name])
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict()) + "\n" for r in self.records)


def evaluate_objectives(
    names: Iterable[str],
    state: LabelingState,
    theta: np.ndarray,
    predictions: np.ndarray,
    graph: BipartiteGraph,
    smoothing: SmoothingConfig,
) -> dict[str, float]:
    out = {}
    for name in names:
        if name == "H":
            out[name] = objective_H(state, predictions)
        elif name == "l_t2":
            out[name] = objective_l_t2(state, predictions)
        elif name == "K_t2":
            out[name] = objective_K_t2(state, theta, graph)
        elif name == "K_delta":
            out[name] = objective_K_delta(state, theta, graph, smoothing.delta)
        else:
            raise ValueError(f"unknown objective {name!r}; choose from {TRACE_OBJECTIVES}")
    return out


@dataclass
class RunResult:
    state: LabelingState
    theta: np.ndarray
    trace: IterationTrace

    def __iter__(self):
        return iter((self.state, self.theta, self.trace))


def run(
    graph: BipartiteGraph,
    seeds: SeedLabels,
    learner_kind: LearnerKind = LearnerKind.DL1,
    smoothing: SmoothingConfig = SmoothingConfig(),
    objectives: Iterable[str] | None = None,
    max_iter: int | None = None,
    on_iteration=None,
) -> RunResult:
    """Run the bootstrapping loop until the labeling stops changing or the budget is spent.

    Each iteration trains ``theta`` on the current labels, evaluates the
    requested objectives (after the update), relabels, and evaluates them
    again. ``on_iteration(record, previous_state, state, theta)`` is called
    after every iteration, which is how the oracles inspect intermediate states.
    """
    kind = LearnerKind(learner_kind)
    names = tuple(DEFAULT_OBJECTIVES[kind] if objectives is None else objectives)
    if max_iter is None:
        max_iter = graph.num_instances + 1
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    state = LabelingState.initial(graph, seeds)
    trace = IterationTrace()
    theta = None
    for t in range(max_iter):
        theta = train(kind, graph, state.labels, smoothing)
        pi, _ = predict_all(kind, theta, graph)
        after_update = evaluate_objectives(names, state, theta, pi, graph, smoothing)
        new_state = relabel_step(state, pi)
        after_relabel = evaluate_objectives(names, new_state, theta, pi, graph, smoothing)
        changed = int(np.count_nonzero(new_state.labels != state.labels))
        stop = None
        if changed == 0:
            stop = "fixpoint"
        elif t + 1 == max_iter:
            stop = "budget"
        record = IterationRecord(t, new_state.num_labeled, changed, after_relabel, after_update, stop)
        trace.records.append(record)
        if on_iteration is not None:
            on_iteration(record, state, new_state, theta)
        state = new_state
        if stop:
            break
    return RunResult(state, theta, trace)
