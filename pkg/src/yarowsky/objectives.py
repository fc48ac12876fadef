"""Objective functions and the oracles that check the optimization claims.

Functions taking a ``state`` accept anything with a ``phi`` attribute (a
``LabelingState``) or a bare ``(N, L)`` array of labeling distributions.
Functions taking an ``assignment`` accept a ``NodeAssignment`` or a
``(feature_dists, instance_dists)`` pair.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .distributions import (
    PsiKind,
    bregman_distance,
    cross_entropy,
    psi_cross_entropy,
    psi_prime,
    psi_second,
    random_simplex,
)
from .graph import BipartiteGraph
from .learners import LearnerKind, SmoothingConfig, predict_all, train


NEG_ENTROPY_FLOOR = 1e-12


def _phi(state) -> np.ndarray:
    return np.asarray(getattr(state, "phi", state), dtype=float)


def _pair(assignment) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(assignment, "feature_dists"):
        return assignment.feature_dists, assignment.instance_dists
    theta, phi = assignment
    return np.asarray(theta, dtype=float), np.asarray(phi, dtype=float)


def _total(values) -> float:
    return float(np.sum(values))


def objective_H(state, predictions) -> float:
    """Sum over instances of the cross entropy between labeling and prediction."""
    return _total(cross_entropy(_phi(state), predictions))


def objective_l_t2(state, predictions) -> float:
    pi = np.asarray(predictions, dtype=float)
    return _total(pi * pi - 2.0 * pi * _phi(state))


def objective_K_t2(state, theta, graph: BipartiteGraph) -> float:
    phi, theta = _phi(state), np.asarray(theta, dtype=float)
    return _total(psi_cross_entropy(PsiKind.QUADRATIC, phi[graph.edge_instance], theta[graph.edge_feature]))


def objective_K_delta(state, theta, graph: BipartiteGraph, delta: float) -> float:
    if delta < 0:
        raise ValueError("delta must be non-negative")
    phi = _phi(state)
    rows = np.asarray(theta, dtype=float)[graph.edge_feature]
    total = _total(cross_entropy(phi[graph.edge_instance], rows))
    if delta > 0:
        u = np.full(graph.num_labels, 1.0 / graph.num_labels)
        total += delta * _total(cross_entropy(u, rows))
    return total


def objective_K_conventional(state, theta, graph: BipartiteGraph) -> float:
    return objective_K_delta(state, theta, graph, 0.0)


def objective_graph_bregman(assignment, graph: BipartiteGraph, psi: PsiKind) -> float:
    """Sum over edges of ``B_psi(theta_f, phi_x)``, feature distribution first."""
    theta, phi = _pair(assignment)
    return _total(bregman_distance(psi, theta[graph.edge_feature], phi[graph.edge_instance]))


def objective_eq11(assignment, graph: BipartiteGraph) -> float:
    theta, phi = _pair(assignment)
    return -2.0 * _total(phi[graph.edge_instance] * theta[graph.edge_feature])


def lemma1_gap(state, theta, graph: BipartiteGraph, m: int) -> float:
    """``K_t2 / m - l_t2`` with DL-1 predictions; non-negative when every ``|F_x| = m``."""
    if not np.all(graph.instance_degree == m):
        raise ValueError("lemma1_gap needs uniform instance degree m; pad the graph first")
    pi, _ = predict_all(LearnerKind.DL1, theta, graph)
    return objective_K_t2(state, theta, graph) / m - objective_l_t2(state, pi)


def lemma1_gap_closed_form(theta, graph: BipartiteGraph, m: int) -> float:
    """``(1/m^2) sum_x sum_j [m sum_f theta_fj^2 - (sum_f theta_fj)^2]``; independent of phi."""
    total = 0.0
    for fs in graph.features_of:
        rows = theta[list(fs)]
        total += float(np.sum(m * np.sum(rows**2, axis=0) - np.sum(rows, axis=0) ** 2))
    return total / m**2


@dataclass(frozen=True)
class Mismatch:
    argmax_sum: int
    argmin_logsum: int

    @property
    def differ(self) -> bool:
        return self.argmax_sum != self.argmin_logsum

    def __iter__(self):
        return iter((self.argmax_sum, self.argmin_logsum, self.differ))


def abney_k_mismatch(theta_rows) -> Mismatch:
    """Compare the DL-1 label (largest summed score) with the label minimizing the conventional K."""
    rows = np.atleast_2d(np.asarray(theta_rows, dtype=float))
    if np.any(rows <= 0):
        raise ValueError("rows must be strictly positive")
    by_sum = int(np.argmax(rows.sum(axis=0)))
    by_log = int(np.argmin(np.sum(-np.log(rows), axis=0)))
    return Mismatch(by_sum, by_log)


def optimality_residual(assignment, graph: BipartiteGraph, psi: PsiKind, seed_mask=None) -> tuple[float, float]:
    """Residuals of the stationarity conditions of the edge-Bregman objective.

    Feature side: max-norm distance between ``theta_f`` and the normalized
    ``grad Psi*`` of the mean neighbor gradient (plain mean for ``t^2``,
    normalized geometric mean for ``t log t``). Instance side: over non-seed
    instances, the spread across labels of
    ``sum_f (theta_fj - phi_x(j)) psi''(phi_x(j))``, which must be constant in j.
    """
    theta, phi = _pair(assignment)
    if seed_mask is None:
        seed_mask = getattr(assignment, "instance_is_seed", np.zeros(graph.num_instances, dtype=bool))
    if psi is PsiKind.NEG_ENTROPY:
        theta_c = np.maximum(theta, NEG_ENTROPY_FLOOR)
        phi_c = np.maximum(phi, NEG_ENTROPY_FLOOR)
    else:
        theta_c, phi_c = theta, phi
    ex, ef = graph.edge_instance, graph.edge_feature

    grad = np.zeros_like(theta)
    np.add.at(grad, ef, psi_prime(psi, phi_c[ex]))
    grad /= graph.feature_degree[:, None]
    if psi is PsiKind.QUADRATIC:
        target = grad / 2.0
    else:
        target = np.exp(grad - 1.0)
    target = target / target.sum(axis=1, keepdims=True)
    feature_res = float(np.max(np.abs(theta - target))) if theta.size else 0.0

    acc = np.zeros_like(phi)
    np.add.at(acc, ex, (theta_c[ef] - phi_c[ex]) * psi_second(psi, phi_c[ex]))
    spread = acc.max(axis=1) - acc.min(axis=1)
    free = ~np.asarray(seed_mask, dtype=bool)
    instance_res = float(spread[free].max()) if free.any() else 0.0
    return feature_res, instance_res


# ---------------------------------------------------------------------------
# Verification oracles


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, (np.floating,)):
        return _jsonable(float(value))
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class VerificationReport:
    """Outcome of a quantified check.

    ``worst_violation`` is the smallest observed margin of the checked
    inequality; negative values mean the inequality was violated by that much.
    """

    check: str
    trials: int
    worst_violation: float
    passed: bool
    witness: Any = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return _jsonable({k: d[k] for k in ("check", "trials", "worst_violation", "pass", "witness", "details")})

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _objective_for(kind: LearnerKind, smoothing: SmoothingConfig):
    kind = LearnerKind(kind)
    if kind is LearnerKind.DL1:
        return "K_t2", lambda phi, theta, graph: objective_K_t2(phi, theta, graph)
    if kind is LearnerKind.DL2S:
        return "K_delta", lambda phi, theta, graph: objective_K_delta(phi, theta, graph, smoothing.delta)
    raise ValueError(f"learner {kind.value} has no objective it provably minimizes")


def perturb_row(rng: np.random.Generator, row: np.ndarray) -> np.ndarray:
    """Random nearby simplex point: step along a random direction, clamp at 0, renormalize.

    Every fourth draw (on average) is instead a fresh uniform simplex sample,
    so both local and global alternatives are tried.
    """
    L = row.shape[0]
    if rng.random() < 0.25:
        return random_simplex(rng, L)
    direction = random_simplex(rng, L) - random_simplex(rng, L)
    moved = np.clip(row + rng.uniform(0.0, 0.5) * direction, 0.0, None)
    s = moved.sum()
    return moved / s if s > 0 else random_simplex(rng, L)


def verify_parameter_optimality(
    state,
    graph: BipartiteGraph,
    learner_kind: LearnerKind,
    smoothing: SmoothingConfig = SmoothingConfig(),
    trials: int = 200,
    rng_seed: int = 0,
    tol: float = 1e-9,
) -> VerificationReport:
    """Check that the learner's update is a minimizer of its objective for fixed labels.

    Each feature row is replaced, one at a time, by ``trials`` random simplex
    perturbations and the full objective is re-evaluated.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    name, objective = _objective_for(learner_kind, smoothing)
    labels = getattr(state, "labels")
    phi = _phi(state)
    rng = np.random.default_rng(rng_seed)
    theta = train(learner_kind, graph, labels, smoothing)
    base = objective(phi, theta, graph)
    worst = math.inf
    witness = None
    for f in range(graph.num_features):
        original = theta[f].copy()
        for _ in range(trials):
            theta[f] = perturb_row(rng, original)
            increase = objective(phi, theta, graph) - base
            if increase < worst:
                worst = increase
                witness = {"feature": f, "row": theta[f].copy(), "increase": increase}
        theta[f] = original
    return VerificationReport(
        check=f"parameter_optimality[{LearnerKind(learner_kind).value}]",
        trials=trials * graph.num_features,
        worst_violation=worst,
        passed=worst >= -tol,
        witness=witness,
        details={"objective": name, "base": base, "rng_seed": rng_seed},
    )


def instance_contributions(
    learner_kind: LearnerKind, theta: np.ndarray, graph: BipartiteGraph, x: int, delta: float = 0.0
) -> tuple[np.ndarray, float]:
    """Per-instance objective for each point-mass labeling of ``x`` and for the uniform one."""
    rows = theta[list(graph.features_of[x])]
    L = graph.num_labels
    kind = LearnerKind(learner_kind)
    if kind is LearnerKind.DL1:
        const = float(np.sum(rows**2))
        per_label = const - 2.0 * rows.sum(axis=0)
        uniform_value = const - 2.0 * rows.sum() / L
    elif kind is LearnerKind.DL2S:
        with np.errstate(divide="ignore"):
            neg_log = -np.log(rows).sum(axis=0)
        const = delta * float(np.mean(neg_log)) if delta > 0 else 0.0
        per_label = neg_log + const
        uniform_value = float(np.mean(neg_log)) + const
    else:
        raise ValueError(f"learner {kind.value} has no per-instance objective")
    return per_label, uniform_value


def verify_label_choice(
    state,
    theta: np.ndarray,
    graph: BipartiteGraph,
    learner_kind: LearnerKind,
    smoothing: SmoothingConfig = SmoothingConfig(),
    previous=None,
    tol: float = 1e-9,
) -> VerificationReport:
    """Check that the relabeling step picked per-instance minimizers for fixed ``theta``.

    * labeled non-seed instances: the chosen label attains the minimum over
      all point masses;
    * unlabeled instances: the uniform labeling is no worse than any point mass;
    * instances unlabeled in ``previous`` and labeled now: the contribution
      dropped strictly below its uniform value.
    """
    labels = np.asarray(state.labels)
    seeds = state.seeds
    prev = None if previous is None else np.asarray(previous.labels)
    worst = math.inf
    worst_case = None
    first_failure = None
    violations = 0
    checked = 0
    for x in range(graph.num_instances):
        if x in seeds:
            continue
        per_label, uni = instance_contributions(learner_kind, theta, graph, x, smoothing.delta)
        best = float(np.min(per_label))
        checks = []
        if labels[x] >= 0:
            checks.append(("argmin", best - float(per_label[labels[x]]), False))
            if prev is not None and prev[x] < 0:
                checks.append(("newly_labeled_drop", uni - float(per_label[labels[x]]), True))
        else:
            checks.append(("uniform_not_worse", best - uni, False))
        for case, margin, strict in checks:
            checked += 1
            failed = margin <= 0.0 if strict else margin < -tol
            record = {"instance": x, "case": case, "margin": margin}
            if failed:
                violations += 1
                first_failure = first_failure or record
            if margin < worst:
                worst, worst_case = margin, record
    witness = first_failure or worst_case
    return VerificationReport(
        check=f"label_choice[{LearnerKind(learner_kind).value}]",
        trials=checked,
        worst_violation=worst,
        passed=violations == 0,
        witness=witness,
        details={"violations": violations},
    )
