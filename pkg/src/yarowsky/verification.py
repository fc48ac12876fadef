"""Quantified property checks, grouped into named suites.

Every suite takes an ``rng_seed`` and returns a list of
:class:`~yarowsky.objectives.VerificationReport`; identical seeds give
identical reports.
"""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np

from .bootstrap import LabelingState, run
from .distributions import PsiKind, cross_entropy, psi_cross_entropy, random_simplex
from .generate import GenConfig, generate_graph
from .graph import BipartiteGraph, SeedLabels, build_graph
from .learners import CountStats, LearnerKind, SmoothingConfig, dl1_update, dl2s_update, predict_all
from .objectives import (
    VerificationReport,
    abney_k_mismatch,
    lemma1_gap,
    lemma1_gap_closed_form,
    objective_graph_bregman,
    objective_H,
    objective_K_delta,
    objective_K_t2,
    optimality_residual,
    verify_label_choice,
    verify_parameter_optimality,
)
from .propagation import (
    OperatorKind,
    iteration_bound,
    local_cut_moves,
    neighbor_average_residual,
    propagate,
)

TOL = 1e-9


def random_graph(rng: np.random.Generator, num_instances: int, num_features: int, num_labels: int,
                 degree: Callable[[], int]) -> BipartiteGraph:
    """Instances pick ``degree()`` distinct features out of ``num_features``; unused features are dropped."""
    records = []
    for i in range(num_instances):
        d = min(degree(), num_features)
        fs = rng.choice(num_features, size=d, replace=False)
        records.append((f"x{i}", None, [f"f{f}" for f in sorted(fs)]))
    graph, _ = build_graph(records, num_labels)
    return graph


def random_labeling(rng: np.random.Generator, n: int, num_labels: int, p_labeled: float = 0.6) -> np.ndarray:
    labels = rng.integers(0, num_labels, size=n)
    return np.where(rng.random(n) < p_labeled, labels, -1)


def _state(labels: np.ndarray, num_labels: int) -> LabelingState:
    return LabelingState(np.asarray(labels, dtype=np.int64), SeedLabels({}), num_labels)


def random_dataset(rng: np.random.Generator, instances=(50, 200), features=(20, 60), labels=(2, 3),
                   noise=(0.0, 0.3)) -> tuple[BipartiteGraph, SeedLabels, GenConfig]:
    L = int(rng.choice(labels))
    config = GenConfig(
        num_instances=int(rng.integers(instances[0], instances[1] + 1)),
        num_features=int(rng.integers(features[0], features[1] + 1)),
        num_labels=L,
        edges_per_instance=(2, 5),
        seed_fraction=0.1,
        noise=float(rng.uniform(*noise)),
        rng_seed=int(rng.integers(2**31)),
    )
    graph, seeds = generate_graph(config)
    return graph, seeds, config


# ---------------------------------------------------------------------------
# Bounds


def suite_lemma1(rng_seed: int = 0, trials: int = 1000) -> list[VerificationReport]:
    """``K_t2 / m >= l_t2`` on random graphs of uniform degree m."""
    rng = np.random.default_rng(rng_seed)
    worst, witness, identity_err = math.inf, None, 0.0
    for trial in range(trials):
        m = int(rng.choice([1, 2, 3, 5]))
        L = int(rng.choice([2, 3, 5]))
        graph = random_graph(rng, int(rng.integers(1, 11)), m + int(rng.integers(0, 8)), L, lambda: m)
        theta = random_simplex(rng, L, size=graph.num_features)
        kind = trial % 3
        if kind == 0:
            phi = _state(random_labeling(rng, graph.num_instances, L), L)
        else:
            phi = random_simplex(rng, L, size=graph.num_instances)
        gap = lemma1_gap(phi, theta, graph, m)
        identity_err = max(identity_err, abs(gap - lemma1_gap_closed_form(theta, graph, m)))
        if gap < worst:
            worst, witness = gap, {"trial": trial, "m": m, "L": L, "gap": gap}
    return [
        VerificationReport("lemma1", trials, worst, worst >= -TOL, witness,
                           {"max_identity_error": identity_err, "rng_seed": rng_seed}),
    ]


def suite_lemma4(rng_seed: int = 0, trials: int = 1000) -> list[VerificationReport]:
    """``H <= K_delta`` for product predictions, together with ``Z_x <= 1``."""
    rng = np.random.default_rng(rng_seed)
    deltas = (0.0, 0.5, 1.0, 5.0)
    worst, witness, worst_z, identity_err = math.inf, None, math.inf, 0.0
    for trial in range(trials):
        delta = deltas[trial % len(deltas)]
        L = int(rng.choice([2, 3, 5]))
        F = int(rng.integers(1, 9))
        graph = random_graph(rng, int(rng.integers(1, 11)), F, L, lambda: int(rng.integers(1, F + 1)))
        theta = random_simplex(rng, L, size=graph.num_features) + 1e-12
        theta /= theta.sum(axis=1, keepdims=True)
        phi = _state(random_labeling(rng, graph.num_instances, L), L).phi
        pi, z = predict_all(LearnerKind.DL2S, theta, graph)
        H = objective_H(phi, pi)
        K = objective_K_delta(phi, theta, graph, delta)
        # H = sum_x log Z_x + K_0 exactly
        identity_err = max(identity_err, abs(H - (np.sum(np.log(z)) + objective_K_delta(phi, theta, graph, 0.0))))
        worst_z = min(worst_z, 1.0 + 1e-12 - float(z.max()))
        if K - H < worst:
            worst, witness = K - H, {"trial": trial, "delta": delta, "H": H, "K_delta": K}
    return [
        VerificationReport("lemma4", trials, worst, worst >= -TOL, witness,
                           {"max_identity_error": identity_err, "rng_seed": rng_seed}),
        VerificationReport("lemma4_normalizer", trials, worst_z, worst_z >= 0.0, None, {"rng_seed": rng_seed}),
    ]


# ---------------------------------------------------------------------------
# Monotonicity of the bootstrapping objectives


def _monotone_runs(rng_seed: int, datasets: int, kind: LearnerKind, smoothings: list[SmoothingConfig],
                   objective: str, check: str) -> list[VerificationReport]:
    rng = np.random.default_rng(rng_seed)
    worst, witness = math.inf, None
    label_worst, label_fail, label_witness, label_checks = math.inf, 0, None, 0
    bound_worst = math.inf
    runs = 0
    for d in range(datasets):
        graph, seeds, config = random_dataset(rng)
        for smoothing in smoothings:
            reports = []

            def inspect(record, previous, state, theta, smoothing=smoothing):
                reports.append(verify_label_choice(state, theta, graph, kind, smoothing, previous=previous))

            objectives = ("H", objective)
            runs += 1
            result = run(graph, seeds, kind, smoothing, objectives=objectives, on_iteration=inspect)
            values = result.trace.half_steps(objective)
            for step, (a, b) in enumerate(zip(values, values[1:])):
                if a - b < worst:
                    worst = a - b
                    witness = {"dataset": d, "delta": smoothing.delta, "half_step": step + 1, "before": a, "after": b}
            if kind is LearnerKind.DL2S:
                for r in result.trace:
                    for vals in (r.after_update, r.objectives):
                        bound_worst = min(bound_worst, vals["K_delta"] - vals["H"])
            for rep in reports:
                label_checks += rep.trials
                label_fail += not rep.passed
                if rep.worst_violation < label_worst:
                    label_worst = rep.worst_violation
                if not rep.passed and label_witness is None:
                    label_witness = rep.witness
    out = [
        VerificationReport(check, runs, worst, worst >= -TOL, witness, {"objective": objective, "rng_seed": rng_seed}),
        VerificationReport(f"{check}_label_choice", label_checks, label_worst, label_fail == 0, label_witness,
                           {"failed_iterations": label_fail}),
    ]
    if kind is LearnerKind.DL2S:
        out.append(VerificationReport(f"{check}_upper_bound", runs, bound_worst, bound_worst >= -TOL, None, {}))
    return out


def suite_theorem2(rng_seed: int = 0, datasets: int = 20) -> list[VerificationReport]:
    """DL-1 never increases ``K_t2`` at either half-step."""
    return _monotone_runs(rng_seed, datasets, LearnerKind.DL1, [SmoothingConfig()], "K_t2", "theorem2")


def suite_theorem6(rng_seed: int = 0, datasets: int = 20, deltas=(0.1, 1.0)) -> list[VerificationReport]:
    """DL-2-S never increases ``K_delta`` at either half-step, and ``H <= K_delta`` throughout."""
    smoothings = [SmoothingConfig(delta=d) for d in deltas]
    return _monotone_runs(rng_seed, datasets, LearnerKind.DL2S, smoothings, "K_delta", "theorem6")


# ---------------------------------------------------------------------------
# Optimality of the parameter updates


def single_feature_graph(labeled0: int, labeled1: int, unlabeled: int) -> tuple[BipartiteGraph, LabelingState]:
    """One feature shared by instances with the given label counts (L=2)."""
    labels = [0] * labeled0 + [1] * labeled1 + [-1] * unlabeled
    graph = BipartiteGraph.from_features([[0]] * len(labels), 2, num_features=1)
    return graph, _state(np.array(labels), 2)


def grid_argmin(objective: Callable[[np.ndarray], float], step: float = 0.01) -> float:
    grid = np.round(np.arange(0.0, 1.0 + step / 2, step), 10)
    values = [objective(np.array([[g, 1.0 - g]])) for g in grid]
    return float(grid[int(np.argmin(values))])


def suite_lemma5(rng_seed: int = 0, trials: int = 200, datasets: int = 3) -> list[VerificationReport]:
    """Perturbation and grid-search oracles for the DL-1 and DL-2-S updates."""
    rng = np.random.default_rng(rng_seed)
    reports = []
    cases = [(LearnerKind.DL1, SmoothingConfig()), (LearnerKind.DL2S, SmoothingConfig(delta=1.0)),
             (LearnerKind.DL2S, SmoothingConfig(delta=0.1))]
    for kind, smoothing in cases:
        worst, witness, total = math.inf, None, 0
        for d in range(datasets):
            graph, seeds, _ = random_dataset(rng, instances=(50, 80), features=(20, 30))
            states = [LabelingState.initial(graph, seeds)]
            run(graph, seeds, kind, smoothing, objectives=(), max_iter=3,
                on_iteration=lambda rec, prev, st, th: states.append(st))
            for state in states[-2:]:
                rep = verify_parameter_optimality(state, graph, kind, smoothing, trials, int(rng.integers(2**31)))
                total += rep.trials
                if rep.worst_violation < worst:
                    worst, witness = rep.worst_violation, rep.witness
        reports.append(VerificationReport(f"lemma5_perturbation[{kind.value},delta={smoothing.delta}]", total,
                                          worst, worst >= -TOL, witness, {"rng_seed": rng_seed}))

    worst, witness, count = math.inf, None, 0
    for a in range(4):
        for b in range(4):
            for v in range(4):
                if a + b + v == 0:
                    continue
                graph, state = single_feature_graph(a, b, v)
                stats = CountStats(np.array([a, b]), np.float64(v))
                targets = [("dl1", float(dl1_update(stats)[0]),
                            lambda th: objective_K_t2(state, th, graph))]
                for delta in (0.5, 1.0):
                    targets.append((f"dl2s/{delta}", float(dl2s_update(stats, delta)[0]),
                                    lambda th, delta=delta: objective_K_delta(state, th, graph, delta)))
                for name, closed_form, objective in targets:
                    found = grid_argmin(objective)
                    margin = 0.01 - abs(found - closed_form)
                    count += 1
                    if margin < worst:
                        worst = margin
                        witness = {"counts": [a, b, v], "update": name, "grid": found, "closed_form": closed_form}
    reports.append(VerificationReport("lemma5_grid", count, worst, worst >= -1e-12, witness, {"step": 0.01}))
    return reports


# ---------------------------------------------------------------------------
# Majority-Majority: cut decrease, termination, local minimality


def _mm_datasets(rng: np.random.Generator, graphs: int):
    for g in range(graphs):
        graph, seeds, _ = random_dataset(rng, instances=(30, 120), features=(20, 50), noise=(0.1, 0.4))
        yield g, graph, seeds


def suite_lemma7(rng_seed: int = 0, graphs: int = 50) -> list[VerificationReport]:
    """Within a round with no newly labeled node, every flipping sweep lowers the cut."""
    rng = np.random.default_rng(rng_seed)
    worst, witness, flipping, edge_bound = math.inf, None, 0, math.inf
    for g, graph, seeds in _mm_datasets(rng, graphs):
        result = propagate(graph, seeds, OperatorKind.MAJORITY, OperatorKind.MAJORITY)
        prev_cut = 0
        for s, c in zip(result.sweeps, result.cut_reports):
            edge_bound = min(edge_bound, c.labeled_left * c.labeled_right - c.cut_size)
            if s.newly_labeled == 0 and s.flipped > 0:
                flipping += 1
                margin = (prev_cut - s.cut) - 1
                if margin < worst:
                    worst, witness = margin, {"graph": g, "sweep": s.sweep, "before": prev_cut, "after": s.cut}
            prev_cut = s.cut
    return [
        VerificationReport("lemma7", flipping, worst, worst >= 0, witness, {"graphs": graphs, "rng_seed": rng_seed}),
        VerificationReport("lemma7_edge_bound", graphs, edge_bound, edge_bound >= 0, None, {}),
    ]


def suite_theorem3(rng_seed: int = 0, graphs: int = 50) -> list[VerificationReport]:
    """Majority-Majority terminates, within the polynomial sweep bound."""
    rng = np.random.default_rng(rng_seed)
    worst, witness, unterminated, longest = math.inf, None, 0, 0
    for g, graph, seeds in _mm_datasets(rng, graphs):
        result = propagate(graph, seeds, OperatorKind.MAJORITY, OperatorKind.MAJORITY)
        unterminated += not result.converged
        productive = result.iterations - 1 if result.converged else result.iterations
        longest = max(longest, result.iterations)
        margin = iteration_bound(graph.num_features, graph.num_instances) - productive
        if margin < worst:
            worst, witness = margin, {"graph": g, "sweeps": result.iterations, "F": graph.num_features,
                                      "X": graph.num_instances}
    return [
        VerificationReport("theorem3", graphs, worst, worst >= 0 and unterminated == 0, witness,
                           {"unterminated": unterminated, "longest_run": longest, "rng_seed": rng_seed}),
    ]


def suite_mincut(rng_seed: int = 0, graphs: int = 300, max_labeled: int = 12) -> list[VerificationReport]:
    """At a Majority-Majority fixpoint no single-node move lowers the L-way cut."""
    rng = np.random.default_rng(rng_seed)
    worst, witness, checked, moves = math.inf, None, 0, 0
    for g in range(graphs):
        L = int(rng.choice([2, 3]))
        config = GenConfig(
            num_instances=int(rng.integers(3, 9)), num_features=int(rng.integers(3, 7)), num_labels=L,
            edges_per_instance=(1, 3), seed_fraction=0.35, noise=float(rng.uniform(0.2, 0.6)),
            rng_seed=int(rng.integers(2**31)),
        )
        graph, seeds = generate_graph(config)
        result = propagate(graph, seeds, OperatorKind.MAJORITY, OperatorKind.MAJORITY)
        if not result.converged or result.assignment.num_labeled > max_labeled:
            continue
        checked += 1
        for column, node, label, delta in local_cut_moves(graph, result.assignment):
            moves += 1
            if delta < worst:
                worst, witness = delta, {"graph": g, "column": column, "node": node, "to": label, "cut_delta": delta}
    return [
        VerificationReport("mincut_local", checked, worst, worst >= 0 and checked > 0, witness,
                           {"moves": moves, "rng_seed": rng_seed}),
    ]


# ---------------------------------------------------------------------------
# Harmonic mode


def suite_harmonic(rng_seed: int = 0, graphs: int = 20, tol: float = 1e-8, bound: float = 1e-7) -> list[VerificationReport]:
    """Average-Average converges to a harmonic assignment satisfying the optimality conditions."""
    rng = np.random.default_rng(rng_seed)
    worst_avg, worst_f, worst_x, unconverged, longest = 0.0, 0.0, 0.0, 0, 0
    for g in range(graphs):
        graph, seeds, _ = random_dataset(rng)
        result = propagate(graph, seeds, OperatorKind.AVERAGE, OperatorKind.AVERAGE, tol=tol)
        unconverged += not result.converged
        longest = max(longest, result.iterations)
        worst_avg = max(worst_avg, neighbor_average_residual(graph, result.assignment))
        rf, rx = optimality_residual(result.assignment, graph, PsiKind.QUADRATIC)
        worst_f, worst_x = max(worst_f, rf), max(worst_x, rx)
    details = {"unconverged": unconverged, "longest_run": longest, "tol": tol, "rng_seed": rng_seed}
    return [
        VerificationReport("harmonic_neighbor_average", graphs, bound - worst_avg,
                           worst_avg <= bound and unconverged == 0, None, details),
        VerificationReport("harmonic_optimality_feature", graphs, bound - worst_f, worst_f <= bound, None, {}),
        VerificationReport("harmonic_optimality_instance", graphs, bound - worst_x, worst_x <= bound, None, {}),
    ]


# ---------------------------------------------------------------------------
# Conventional-K mismatch and exact equivalences


def suite_mismatch(rng_seed: int = 0, trials: int = 10_000) -> list[VerificationReport]:
    """Random 3-feature, 2-label rows where the mean-score label differs from the conventional-K label."""
    rng = np.random.default_rng(rng_seed)
    witness, found = None, 0
    for trial in range(trials):
        a = rng.uniform(0.0, 1.0, size=3)
        rows = np.column_stack([a, 1.0 - a])
        if np.any(rows <= 0):
            continue
        m = abney_k_mismatch(rows)
        if m.differ:
            found += 1
            if witness is None:
                witness = {"trial": trial, "rows": rows, "argmax_sum": m.argmax_sum, "argmin_logsum": m.argmin_logsum}
    canonical = abney_k_mismatch([[0.8, 0.2], [0.8, 0.2], [0.01, 0.99]])
    return [
        VerificationReport("mismatch", trials, float(found), found > 0 and canonical.differ, witness,
                           {"differ_count": found, "canonical": list(canonical), "rng_seed": rng_seed}),
    ]


def explicit_bregman_sum(theta: np.ndarray, phi: np.ndarray, graph: BipartiteGraph) -> float:
    total = 0.0
    for f, xs in enumerate(graph.instances_of):
        for x in xs:
            for j in range(graph.num_labels):
                total += (theta[f, j] - phi[x, j]) ** 2
    return total


def suite_equivalences(rng_seed: int = 0, trials: int = 1000) -> list[VerificationReport]:
    rng = np.random.default_rng(rng_seed)
    err_update = err_ce = err_breg = 0.0
    for _ in range(trials):
        L = int(rng.choice([2, 3, 5]))
        lam = rng.integers(0, 10, size=L)
        v = int(rng.integers(0 if lam.sum() else 1, 10))
        stats = CountStats(lam, np.float64(v))
        err_update = max(err_update, float(np.max(np.abs(dl2s_update(stats, 0.0) - dl1_update(stats)))))
        p, q = random_simplex(rng, L), random_simplex(rng, L)
        err_ce = max(err_ce, abs(float(psi_cross_entropy(PsiKind.NEG_ENTROPY, p, q)) - float(cross_entropy(p, q))))
    for _ in range(trials):
        L = int(rng.choice([2, 3, 5]))
        F = int(rng.integers(1, 8))
        graph = random_graph(rng, int(rng.integers(1, 12)), F, L, lambda: int(rng.integers(1, F + 1)))
        theta = random_simplex(rng, L, size=graph.num_features)
        phi = random_simplex(rng, L, size=graph.num_instances)
        err_breg = max(err_breg, abs(objective_graph_bregman((theta, phi), graph, PsiKind.QUADRATIC)
                                     - explicit_bregman_sum(theta, phi, graph)))
    return [
        VerificationReport("equiv_dl2s_delta0", trials, 1e-12 - err_update, err_update <= 1e-12, None, {"max_error": err_update}),
        VerificationReport("equiv_negentropy_cross_entropy", trials, 1e-12 - err_ce, err_ce <= 1e-12, None, {"max_error": err_ce}),
        VerificationReport("equiv_graph_bregman", trials, 1e-12 - err_breg, err_breg <= 1e-12, None, {"max_error": err_breg}),
    ]


SUITES: dict[str, Callable[[int], list[VerificationReport]]] = {
    "lemma1": suite_lemma1,
    "lemma4": suite_lemma4,
    "theorem2": suite_theorem2,
    "theorem6": suite_theorem6,
    "lemma5": suite_lemma5,
    "lemma7": suite_lemma7,
    "theorem3": suite_theorem3,
    "mincut": suite_mincut,
    "harmonic": suite_harmonic,
    "mismatch": suite_mismatch,
    "equivalences": suite_equivalences,
}


def run_suite(name: str, rng_seed: int = 0) -> list[VerificationReport]:
    if name == "all":
        return [rep for key in SUITES for rep in SUITES[key](rng_seed)]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join([*SUITES, 'all'])}")
    return SUITES[name](rng_seed)
