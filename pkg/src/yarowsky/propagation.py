"""Label propagation on the instance/feature graph with majority or average operators.

Majority on both sides is the Majority-Majority algorithm whose fixpoints are
local minimum multi-way cuts; average on both sides converges to the harmonic
assignment; average on features with majority on instances behaves like DL-1.
"""

from __future__ import annotations

import enum
import json
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .distributions import is_uniform, point_mass, uniform
from .graph import BipartiteGraph, SeedLabels

UNIFORM_ATOL = 1e-12


class OperatorKind(str, enum.Enum):
    MAJORITY = "majority"
    AVERAGE = "average"


def majority(dists: Sequence[np.ndarray], num_labels: int | None = None, current: int | None = None) -> np.ndarray:
    """Vote of the non-uniform distributions in ``dists``, each for its argmax.

    Returns uniform when nobody votes or every label gets the same support.
    Otherwise the top label gets all the mass; among several top labels,
    ``current`` wins if it is one of them, else the lowest index.
    """
    if num_labels is None:
        if not len(dists):
            raise ValueError("num_labels is required for an empty vote")
        num_labels = len(dists[0])
    counts = np.zeros(num_labels, dtype=np.int64)
    for d in dists:
        d = np.asarray(d, dtype=float)
        if not is_uniform(d, UNIFORM_ATOL):
            counts[int(np.argmax(d))] += 1
    return _decide(counts[None, :], np.array([-1 if current is None else current]))[0]


def average(dists: Sequence[np.ndarray], num_labels: int | None = None) -> np.ndarray:
    if not len(dists):
        if num_labels is None:
            raise ValueError("num_labels is required for an empty average")
        return uniform(num_labels)
    total = np.sum(np.asarray(dists, dtype=float), axis=0)
    return total / total.sum()


def _decide(counts: np.ndarray, current: np.ndarray) -> np.ndarray:
    """Vectorized majority over vote-count rows; uniform rows mean "no decision"."""
    n, L = counts.shape
    top = counts.max(axis=1)
    tied = counts == top[:, None]
    out = np.full((n, L), 1.0 / L)
    decided = ~np.all(tied, axis=1)
    winner = np.argmax(tied, axis=1)
    keep = (current >= 0) & tied[np.arange(n), np.clip(current, 0, L - 1)]
    winner = np.where(keep, current, winner)
    rows = np.flatnonzero(decided)
    out[rows] = 0.0
    out[rows, winner[rows]] = 1.0
    return out


@dataclass
class NodeAssignment:
    """Distributions on both columns plus the "ever labeled" flags."""

    feature_dists: np.ndarray
    instance_dists: np.ndarray
    feature_labeled: np.ndarray
    instance_labeled: np.ndarray
    instance_is_seed: np.ndarray

    @classmethod
    def initial(cls, graph: BipartiteGraph, seeds: SeedLabels) -> "NodeAssignment":
        seeds.validate(graph)
        L = graph.num_labels
        inst = np.full((graph.num_instances, L), 1.0 / L)
        for x, j in seeds.items():
            inst[x] = point_mass(j, L)
        mask = seeds.mask(graph.num_instances)
        return cls(
            feature_dists=np.full((graph.num_features, L), 1.0 / L),
            instance_dists=inst,
            feature_labeled=np.zeros(graph.num_features, dtype=bool),
            instance_labeled=mask.copy(),
            instance_is_seed=mask,
        )

    def copy(self) -> "NodeAssignment":
        return NodeAssignment(*(a.copy() for a in self._arrays()))

    def _arrays(self):
        return (self.feature_dists, self.instance_dists, self.feature_labeled, self.instance_labeled, self.instance_is_seed)

    @property
    def feature_hard(self) -> np.ndarray:
        return _hard(self.feature_dists, self.feature_labeled)

    @property
    def instance_hard(self) -> np.ndarray:
        return _hard(self.instance_dists, self.instance_labeled)

    @property
    def num_labeled(self) -> int:
        return int(self.feature_labeled.sum() + self.instance_labeled.sum())


def _hard(dists: np.ndarray, labeled: np.ndarray) -> np.ndarray:
    top = dists.max(axis=1, keepdims=True)
    return np.where(labeled, np.argmax(dists >= top - UNIFORM_ATOL, axis=1), -1)


def cut_size(graph: BipartiteGraph, assignment: NodeAssignment) -> int:
    """Edges whose endpoints are both labeled and carry different hard labels."""
    fh = assignment.feature_hard[graph.edge_feature]
    xh = assignment.instance_hard[graph.edge_instance]
    return int(np.count_nonzero((fh >= 0) & (xh >= 0) & (fh != xh)))


def iteration_bound(num_features: int, num_instances: int) -> int:
    """``sum_{i<=|F|} sum_{j<=|X|} i*j``, the worst-case sweep count of Majority-Majority."""
    if num_features < 1 or num_instances < 1:
        raise ValueError("counts must be >= 1")
    return (num_features * (num_features + 1) // 2) * (num_instances * (num_instances + 1) // 2)


@dataclass(frozen=True)
class CutReport:
    iteration: int
    cut_size: int
    labeled_left: int  # features
    labeled_right: int  # instances


@dataclass
class SweepRecord:
    sweep: int
    labeled: int
    newly_labeled: int
    flipped: int
    cut: int | None
    max_delta: float

    def to_dict(self) -> dict:
        return {"sweep": self.sweep, "labeled": self.labeled, "cut": self.cut, "max_delta": self.max_delta}


@dataclass
class PropagationResult:
    assignment: NodeAssignment
    cut_reports: list[CutReport]
    iterations: int
    converged: bool
    sweeps: list[SweepRecord] = field(default_factory=list)

    def __iter__(self):
        return iter((self.assignment, self.cut_reports, self.iterations))

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_dict()) + "\n" for s in self.sweeps)


def _update_column(
    op: OperatorKind,
    src_dists: np.ndarray,
    src_idx: np.ndarray,
    dst_idx: np.ndarray,
    dst_degree: np.ndarray,
    dists: np.ndarray,
    labeled: np.ndarray,
    frozen: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    # Jacobi update of one column from the other column's current distributions.
    n, L = dists.shape
    if op is OperatorKind.MAJORITY:
        voters = ~is_uniform(src_dists, UNIFORM_ATOL)
        vote = np.argmax(src_dists, axis=1)
        use = voters[src_idx]
        counts = np.zeros((n, L), dtype=np.int64)
        np.add.at(counts, (dst_idx[use], vote[src_idx[use]]), 1)
        current = _hard(dists, labeled)
        proposal = _decide(counts, current)
    else:
        acc = np.zeros((n, L))
        np.add.at(acc, dst_idx, src_dists[src_idx])
        proposal = acc / acc.sum(axis=1, keepdims=True)
    assign = ~is_uniform(proposal, UNIFORM_ATOL) & ~frozen
    new = dists.copy()
    new[assign] = proposal[assign]
    return new, labeled | assign


def propagate(
    graph: BipartiteGraph,
    seeds: SeedLabels,
    feature_op: OperatorKind = OperatorKind.MAJORITY,
    instance_op: OperatorKind = OperatorKind.MAJORITY,
    max_iter: int | None = None,
    tol: float = 1e-8,
) -> PropagationResult:
    """Alternate feature-column and instance-column updates until stable.

    A node is (re)assigned only when its operator output is non-uniform, so a
    labeled node never returns to unlabeled. Stopping rule: unchanged hard
    labels when both operators are majority, max entrywise change below
    ``tol`` when both are average, both conditions for mixed modes.
    ``iterations`` counts every sweep run, including the final one that
    confirms nothing changed.
    """
    feature_op, instance_op = OperatorKind(feature_op), OperatorKind(instance_op)
    mm = feature_op is OperatorKind.MAJORITY and instance_op is OperatorKind.MAJORITY
    aa = feature_op is OperatorKind.AVERAGE and instance_op is OperatorKind.AVERAGE
    if max_iter is None:
        if feature_op is OperatorKind.MAJORITY and instance_op is OperatorKind.MAJORITY:
            max_iter = iteration_bound(graph.num_features, graph.num_instances) + 1
        else:
            max_iter = 10 * (graph.num_features + graph.num_instances) ** 2
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    a = NodeAssignment.initial(graph, seeds)
    ex, ef = graph.edge_instance, graph.edge_feature
    no_freeze = np.zeros(graph.num_features, dtype=bool)
    cuts: list[CutReport] = []
    sweeps: list[SweepRecord] = []
    converged = False
    sweep = 0
    while sweep < max_iter:
        sweep += 1
        before = a.copy()
        fd, fl = _update_column(feature_op, a.instance_dists, ex, ef, graph.feature_degree,
                                a.feature_dists, a.feature_labeled, no_freeze)
        a.feature_dists, a.feature_labeled = fd, fl
        xd, xl = _update_column(instance_op, a.feature_dists, ef, ex, graph.instance_degree,
                                a.instance_dists, a.instance_labeled, a.instance_is_seed)
        a.instance_dists, a.instance_labeled = xd, xl

        max_delta = float(max(np.max(np.abs(a.feature_dists - before.feature_dists), initial=0.0),
                              np.max(np.abs(a.instance_dists - before.instance_dists), initial=0.0)))
        newly = a.num_labeled - before.num_labeled
        flipped = int(np.count_nonzero((before.feature_hard >= 0) & (a.feature_hard != before.feature_hard))
                      + np.count_nonzero((before.instance_hard >= 0) & (a.instance_hard != before.instance_hard)))
        labels_same = (np.array_equal(a.feature_hard, before.feature_hard)
                       and np.array_equal(a.instance_hard, before.instance_hard))
        cut = None
        if mm:
            cut = cut_size(graph, a)
            cuts.append(CutReport(sweep, cut, int(a.feature_labeled.sum()), int(a.instance_labeled.sum())))
        sweeps.append(SweepRecord(sweep, a.num_labeled, newly, flipped, cut, max_delta))

        if mm:
            done = labels_same
        elif aa:
            done = max_delta < tol
        else:
            done = labels_same and max_delta < tol
        if done:
            converged = True
            break
    return PropagationResult(a, cuts, sweep, converged, sweeps)


def neighbor_average_residual(graph: BipartiteGraph, assignment: NodeAssignment) -> float:
    """Max distance between a non-seed node's distribution and the mean of its neighbors'."""
    ex, ef = graph.edge_instance, graph.edge_feature
    L = graph.num_labels
    f_mean = np.zeros((graph.num_features, L))
    np.add.at(f_mean, ef, assignment.instance_dists[ex])
    f_mean /= graph.feature_degree[:, None]
    x_mean = np.zeros((graph.num_instances, L))
    np.add.at(x_mean, ex, assignment.feature_dists[ef])
    x_mean /= graph.instance_degree[:, None]
    free = ~assignment.instance_is_seed
    res_f = np.max(np.abs(f_mean - assignment.feature_dists), initial=0.0)
    res_x = np.max(np.abs(x_mean - assignment.instance_dists)[free], initial=0.0)
    return float(max(res_f, res_x))


def local_cut_moves(graph: BipartiteGraph, assignment: NodeAssignment) -> list[tuple[str, int, int, int]]:
    """Every single-node relabeling of a labeled non-seed node and its cut change.

    Returns ``(column, node, new_label, cut_delta)`` tuples; at a local minimum
    every ``cut_delta`` is non-negative. Cuts are recounted from scratch.
    """
    base = cut_size(graph, assignment)
    moves = []
    for column, labeled, seeds in (
        ("feature", assignment.feature_labeled, np.zeros_like(assignment.feature_labeled)),
        ("instance", assignment.instance_labeled, assignment.instance_is_seed),
    ):
        for node in np.flatnonzero(labeled & ~seeds):
            dists = assignment.feature_dists if column == "feature" else assignment.instance_dists
            old = dists[node].copy()
            current = int(np.argmax(old))
            for j in range(graph.num_labels):
                if j == current:
                    continue
                dists[node] = point_mass(j, graph.num_labels)
                moves.append((column, int(node), j, cut_size(graph, assignment) - base))
            dists[node] = old
    return moves
