import math

import numpy as np
import pytest

from yarowsky.bootstrap import LabelingState, relabel_step
from yarowsky.distributions import PsiKind, cross_entropy, point_mass, uniform
from yarowsky.generate import GenConfig, generate_graph
from yarowsky.graph import BipartiteGraph, SeedLabels
from yarowsky.learners import LearnerKind, SmoothingConfig, predict_all, train
from yarowsky.objectives import (
    VerificationReport,
    abney_k_mismatch,
    instance_contributions,
    lemma1_gap,
    lemma1_gap_closed_form,
    objective_eq11,
    objective_graph_bregman,
    objective_H,
    objective_K_conventional,
    objective_K_delta,
    objective_K_t2,
    objective_l_t2,
    optimality_residual,
    verify_label_choice,
    verify_parameter_optimality,
)
from yarowsky.verification import random_labeling

LN06 = -math.log(0.6)
EDGE = BipartiteGraph.from_features([[0]], 2)


class TestInstanceObjectives:
    def test_H(self):
        assert objective_H([[1, 0]], [[0.6, 0.4]]) == pytest.approx(LN06)
        assert objective_H([[0.5, 0.5]], [[0.5, 0.5]]) == pytest.approx(math.log(2))
        assert objective_H([[1, 0], [0, 1]], [[1, 0], [0, 1]]) == 0.0

    def test_H_infinite(self):
        assert objective_H([[1, 0]], [[0, 1]]) == math.inf

    def test_l_t2(self):
        assert objective_l_t2([[1, 0]], [[0.6, 0.4]]) == pytest.approx(-0.68)
        assert objective_l_t2([[0.5, 0.5]], [[0.5, 0.5]]) == pytest.approx(-0.5)
        pi = np.array([[0.2, 0.8], [0.7, 0.3]])
        assert objective_l_t2(pi, pi) == pytest.approx(-np.sum(pi**2))


class TestEdgeObjectives:
    def test_K_t2(self):
        assert objective_K_t2([[1, 0]], [[0.6, 0.4]], EDGE) == pytest.approx(-0.68)
        assert objective_K_t2([[0.5, 0.5]], [[0.5, 0.5]], EDGE) == pytest.approx(-0.5)
        two = BipartiteGraph.from_features([[0], [0]], 2)
        assert objective_K_t2([[1, 0], [1, 0]], [[0.6, 0.4]], two) == pytest.approx(-1.36)

    def test_K_delta(self):
        assert objective_K_delta([[1, 0]], [[0.6, 0.4]], EDGE, 1.0) == pytest.approx(1.224384, abs=1e-6)
        assert objective_K_delta([[1, 0]], [[0.6, 0.4]], EDGE, 0.0) == pytest.approx(cross_entropy([1, 0], [0.6, 0.4]))
        three = BipartiteGraph.from_features([[0]], 3)
        assert objective_K_delta([uniform(3)], [uniform(3)], three, 2.0) == pytest.approx(3 * math.log(3))

    def test_K_conventional_is_edge_cross_entropy(self):
        rng = np.random.default_rng(0)
        graph, _ = generate_graph(GenConfig(20, 8, 2, rng_seed=0))
        theta = rng.dirichlet([1, 1], size=graph.num_features)
        phi = rng.dirichlet([1, 1], size=graph.num_instances)
        expected = sum(cross_entropy(phi[x], theta[f]) for f, xs in enumerate(graph.instances_of) for x in xs)
        assert objective_K_conventional(phi, theta, graph) == pytest.approx(expected)

    def test_graph_bregman(self):
        assert objective_graph_bregman(([[0.3, 0.7]], [[0.3, 0.7]]), EDGE, PsiKind.QUADRATIC) == pytest.approx(0)
        assert objective_graph_bregman(([[1, 0]], [[0, 1]]), EDGE, PsiKind.QUADRATIC) == pytest.approx(2)
        assert objective_graph_bregman(([[0.5, 0.5]], [[1, 0]]), EDGE, PsiKind.QUADRATIC) == pytest.approx(0.5)

    def test_negative_inner_product_objective(self):
        star = BipartiteGraph.from_features([[0], [0]], 2)
        assert objective_eq11(([[0.5, 0.5]], [[1, 0], [0, 1]]), star) == pytest.approx(-2)
        assert objective_eq11(([[1, 0]], [[1, 0]]), EDGE) == pytest.approx(-2)
        graph, _ = generate_graph(GenConfig(15, 6, 2, rng_seed=3))
        theta = np.full((graph.num_features, 2), 0.5)
        phi = np.full((graph.num_instances, 2), 0.5)
        assert objective_eq11((theta, phi), graph) == pytest.approx(-graph.num_edges)


class TestCauchySchwarzGap:
    def test_identical_rows(self):
        graph = BipartiteGraph.from_features([[0, 1], [1, 2]], 2)
        theta = np.array([[0.3, 0.7]] * 3)
        assert lemma1_gap([[1, 0], [0, 1]], theta, graph, 2) == pytest.approx(0, abs=1e-14)

    def test_m1(self):
        rng = np.random.default_rng(1)
        graph = BipartiteGraph.from_features([[0], [1], [1]], 3)
        theta = rng.dirichlet(np.ones(3), size=2)
        phi = rng.dirichlet(np.ones(3), size=3)
        assert lemma1_gap(phi, theta, graph, 1) == pytest.approx(0, abs=1e-14)

    def test_m2_opposite_rows(self):
        graph = BipartiteGraph.from_features([[0, 1]], 2)
        theta = np.array([[1.0, 0.0], [0.0, 1.0]])
        for phi in ([[1, 0]], [[0.5, 0.5]], [[0.2, 0.8]]):
            assert lemma1_gap(phi, theta, graph, 2) == pytest.approx(0.5)
        assert lemma1_gap_closed_form(theta, graph, 2) == pytest.approx(0.5)

    def test_rejects_non_uniform_degree(self):
        graph = BipartiteGraph.from_features([[0], [0, 1]], 2)
        with pytest.raises(ValueError):
            lemma1_gap([[1, 0], [1, 0]], np.full((2, 2), 0.5), graph, 2)


class TestMismatch:
    def test_canonical_family(self):
        m = abney_k_mismatch([[0.8, 0.2], [0.8, 0.2], [0.01, 0.99]])
        assert (m.argmax_sum, m.argmin_logsum, m.differ) == (0, 1, True)

    def test_single_row(self):
        m = abney_k_mismatch([[0.3, 0.7]])
        assert (m.argmax_sum, m.argmin_logsum, m.differ) == (1, 1, False)

    def test_identical_rows(self):
        m = abney_k_mismatch([[0.6, 0.4]] * 4)
        assert not m.differ and m.argmax_sum == 0


class TestResidual:
    def test_quadratic_chain_fixpoint(self):
        graph = BipartiteGraph.from_features([[0], [0]], 2)
        theta, phi = np.array([[0.5, 0.5]]), np.array([[1.0, 0.0], [0.0, 1.0]])
        rf, _ = optimality_residual((theta, phi), graph, PsiKind.QUADRATIC, seed_mask=np.array([True, True]))
        assert rf == pytest.approx(0, abs=1e-15)

    def test_neg_entropy_symmetric_neighbors(self):
        graph = BipartiteGraph.from_features([[0], [0]], 2)
        phi = np.array([[0.8, 0.2], [0.2, 0.8]])
        rf, _ = optimality_residual(([[0.5, 0.5]], phi), graph, PsiKind.NEG_ENTROPY, seed_mask=np.array([True, True]))
        assert rf == pytest.approx(0, abs=1e-12)
        rf, _ = optimality_residual(([[0.6, 0.4]], phi), graph, PsiKind.NEG_ENTROPY, seed_mask=np.array([True, True]))
        assert rf > 1e-3

    def test_quadratic_both_sides(self):
        # f and g each average their two instances; each instance averages its two features
        graph = BipartiteGraph.from_features([[0, 1], [0, 1]], 2)
        theta = np.array([[0.6, 0.4], [0.6, 0.4]])
        phi = np.array([[0.6, 0.4], [0.6, 0.4]])
        rf, rx = optimality_residual((theta, phi), graph, PsiKind.QUADRATIC)
        assert rf == pytest.approx(0, abs=1e-15) and rx == pytest.approx(0, abs=1e-15)


def _dataset(seed, L=2):
    rng = np.random.default_rng(seed)
    graph, _ = generate_graph(GenConfig(50, 20, L, noise=0.2, rng_seed=seed))
    labels = random_labeling(rng, graph.num_instances, L)
    return graph, LabelingState(labels, SeedLabels({0: int(max(labels[0], 0))}), L)


@pytest.mark.parametrize("kind, smoothing", [(LearnerKind.DL1, SmoothingConfig()),
                                             (LearnerKind.DL2S, SmoothingConfig(delta=1.0))])
def test_parameter_optimality_oracle(kind, smoothing):
    graph, state = _dataset(4)
    report = verify_parameter_optimality(state, graph, kind, smoothing, trials=30)
    assert report.passed and report.worst_violation >= -1e-9


def test_dl1_update_beats_alternative_rows():
    graph, state = _dataset(5)
    best = objective_K_t2(state, train(LearnerKind.DL1, graph, state.labels, SmoothingConfig()), graph)
    for kind in (LearnerKind.DL1R, LearnerKind.DL0):
        other = train(kind, graph, state.labels, SmoothingConfig())
        assert best <= objective_K_t2(state, other, graph) + 1e-12
    assert best <= objective_K_t2(state, np.full((graph.num_features, 2), 0.5), graph) + 1e-12


def test_label_choice_uniform_prediction_ties():
    graph = BipartiteGraph.from_features([[0]], 2)
    theta = np.array([[0.5, 0.5]])
    per_label, uniform_value = instance_contributions(LearnerKind.DL1, theta, graph, 0)
    assert per_label[0] == per_label[1]
    assert uniform_value <= per_label.min()


def test_label_choice_dl1_prefers_larger_prediction():
    graph = BipartiteGraph.from_features([[0]], 2)
    per_label, _ = instance_contributions(LearnerKind.DL1, np.array([[0.6, 0.4]]), graph, 0)
    assert int(np.argmin(per_label)) == 0


@pytest.mark.parametrize("kind", [LearnerKind.DL1, LearnerKind.DL2S])
def test_label_choice_report(kind):
    graph, state = _dataset(6, L=3)
    smoothing = SmoothingConfig(delta=0.5)
    theta = train(kind, graph, state.labels, smoothing)
    pi, _ = predict_all(kind, theta, graph)
    new = relabel_step(state, pi)
    report = verify_label_choice(new, theta, graph, kind, smoothing, previous=state)
    assert report.passed, report.to_json()


def test_report_json_encodes_infinity():
    report = VerificationReport("x", 1, math.inf, True, None, {"v": -math.inf})
    assert '"worst_violation": "inf"' in report.to_json()
    assert '"pass": true' in report.to_json()
