import json

import numpy as np
import pytest

from yarowsky.bootstrap import LabelingState, choose_label, relabel_step, run
from yarowsky.generate import GenConfig, generate_graph
from yarowsky.graph import BipartiteGraph, SeedLabels, pad_to_uniform_degree
from yarowsky.learners import LearnerKind, SmoothingConfig


def _state(labels, seeds, L=2):
    return LabelingState(np.array(labels), SeedLabels(seeds), L)


class TestRelabel:
    def test_confident_unlabeled_gets_labeled(self):
        new = relabel_step(_state([-1], {}), [[0.55, 0.45]])
        assert list(new.labels) == [0]

    def test_exact_threshold_stays_unlabeled(self):
        new = relabel_step(_state([-1], {}), [[0.5, 0.5]])
        assert list(new.labels) == [-1]

    def test_seed_frozen(self):
        new = relabel_step(_state([1], {0: 1}), [[0.9, 0.1]])
        assert list(new.labels) == [1]

    def test_labeled_follows_prediction_even_when_weak(self):
        new = relabel_step(_state([1, 0], {}), [[0.6, 0.4], [0.5, 0.5]])
        assert list(new.labels) == [0, 0]

    def test_three_labels_threshold(self):
        new = relabel_step(_state([-1, -1], {}, L=3), [[0.34, 0.33, 0.33], [1 / 3, 1 / 3, 1 / 3]])
        assert list(new.labels) == [0, -1]

    def test_choose_label_tie_goes_low(self):
        assert list(choose_label(np.array([[0.2, 0.4, 0.4], [0.5, 0.5, 0.0]]))) == [1, 0]


def test_chain_seed_feature_instance():
    # x0 is a + seed, x1 is unlabeled, both share the one feature
    graph = BipartiteGraph.from_features([[0], [0]], 2)
    result = run(graph, SeedLabels({0: 0}), LearnerKind.DL1)
    first = result.trace[0]
    assert first.labeled == 2 and first.changed == 1
    assert len(result.trace) == 2 and result.trace.stop_reason == "fixpoint"
    assert list(result.state.labels) == [0, 0]


def test_chain_first_theta():
    graph = BipartiteGraph.from_features([[0], [0]], 2)
    seen = []
    run(graph, SeedLabels({0: 0}), on_iteration=lambda rec, prev, new, theta: seen.append(theta.copy()))
    np.testing.assert_allclose(seen[0][0], [0.75, 0.25])


def test_all_seeded_stops_immediately():
    graph = BipartiteGraph.from_features([[0], [0, 1], [1]], 2)
    result = run(graph, SeedLabels({0: 0, 1: 1, 2: 1}))
    assert len(result.trace) == 1 and result.trace[0].changed == 0
    assert result.trace.stop_reason == "fixpoint"


def test_disconnected_instance_stays_unlabeled():
    graph = BipartiteGraph.from_features([[0], [0], [1]], 2)
    padded, _ = pad_to_uniform_degree(graph)
    result = run(padded, SeedLabels({0: 0}), LearnerKind.DL1)
    assert result.state.labels[2] == -1
    assert result.state.labels[1] == 0


def test_budget_stop():
    graph, seeds = generate_graph(GenConfig(80, 30, 2, rng_seed=3, seed_fraction=0.05))
    result = run(graph, seeds, max_iter=1)
    assert len(result.trace) == 1
    assert result.trace.stop_reason in ("budget", "fixpoint")
    with pytest.raises(ValueError):
        run(graph, seeds, max_iter=0)


@pytest.mark.parametrize("kind", list(LearnerKind))
def test_labels_never_revert_and_seeds_frozen(kind):
    graph, seeds = generate_graph(GenConfig(120, 40, 3, noise=0.2, rng_seed=8))
    seed_labels = seeds.label_array(graph.num_instances)
    mask = seeds.mask(graph.num_instances)

    def check(record, prev, new, theta):
        assert np.all(new.labels[prev.labeled] >= 0)
        np.testing.assert_array_equal(new.labels[mask], seed_labels[mask])

    result = run(graph, seeds, kind, on_iteration=check)
    assert result.trace.stop_reason == "fixpoint"


def _reference_dl1(graph, seed_map, max_iter=200):
    """Literal loop: count labels per feature, apply the update, average, relabel."""
    L = graph.num_labels
    labels = [seed_map.get(x, -1) for x in range(graph.num_instances)]
    history = []
    for _ in range(max_iter):
        theta = []
        for xs in graph.instances_of:
            lam = [0] * L
            v = 0
            for x in xs:
                if labels[x] < 0:
                    v += 1
                else:
                    lam[labels[x]] += 1
            theta.append([(lam[j] + v / L) / (sum(lam) + v) for j in range(L)])
        new = []
        for x, fs in enumerate(graph.features_of):
            pi = [sum(theta[f][j] for f in fs) / len(fs) for j in range(L)]
            best = min(j for j in range(L) if pi[j] >= max(pi) - 1e-12)
            if x in seed_map:
                new.append(seed_map[x])
            elif labels[x] >= 0 or pi[best] > 1 / L + 1e-12:
                new.append(best)
            else:
                new.append(-1)
        history.append(new)
        if new == labels:
            break
        labels = new
    return history


@pytest.mark.parametrize("seed", range(5))
def test_dl1_matches_literal_reference(seed):
    graph, seeds = generate_graph(GenConfig(70, 25, 2 + seed % 2, noise=0.25, rng_seed=seed))
    seen = []
    run(graph, seeds, LearnerKind.DL1, on_iteration=lambda rec, prev, new, theta: seen.append(new.labels.tolist()))
    assert seen == _reference_dl1(graph, dict(seeds.items()))


def test_trace_json_shape():
    graph, seeds = generate_graph(GenConfig(40, 20, 2, rng_seed=1))
    result = run(graph, seeds, LearnerKind.DL2S, SmoothingConfig(delta=0.5), objectives=("H", "K_delta"))

    rows = [json.loads(line) for line in result.trace.to_jsonl().splitlines()]
    assert list(rows[0]) == ["t", "labeled", "changed", "H", "l_t2", "K_t2", "K_delta", "after_update", "stop"]
    assert rows[0]["K_t2"] is None
    assert all(r["H"] <= r["K_delta"] + 1e-9 for r in rows)
    assert rows[-1]["stop"] == "fixpoint"
