import numpy as np
import pytest

from yarowsky.generate import GenConfig, generate_graph
from yarowsky.graph import BipartiteGraph
from yarowsky.learners import (
    CountStats,
    LearnerKind,
    SmoothingConfig,
    all_count_stats,
    count_stats,
    dl1_update,
    dl2s_update,
    predict_all,
    predict_dl0,
    predict_dl1,
    predict_dl2,
    raw_precision,
    smoothed_precision,
    train,
)
from yarowsky.verification import random_labeling

A = np.array([[0.8, 0.2], [0.4, 0.6]])


def one_instance(theta_rows):
    theta = np.asarray(theta_rows, dtype=float)
    graph = BipartiteGraph.from_features([list(range(len(theta)))], theta.shape[1])
    return theta, graph


class TestCounts:
    def _star(self, labels):
        graph = BipartiteGraph.from_features([[0]] * len(labels), 2)
        return count_stats(graph, np.array(labels), 0)

    def test_all_labeled(self):
        s = self._star([0, 0, 1])
        assert list(s.lambda_fj) == [2, 1] and s.lambda_f == 3 and s.v_f == 0 and s.x_f == 3

    def test_all_unlabeled(self):
        s = self._star([-1])
        assert list(s.lambda_fj) == [0, 0] and s.v_f == 1 and s.x_f == 1

    def test_mixed(self):
        s = self._star([0, -1])
        assert list(s.lambda_fj) == [1, 0] and s.lambda_f == 1 and s.v_f == 1 and s.x_f == 2

    def test_batched_matches_per_feature(self):
        rng = np.random.default_rng(0)
        graph, _ = generate_graph(GenConfig(60, 25, 3, rng_seed=1))
        labels = random_labeling(rng, graph.num_instances, 3)
        batch = all_count_stats(graph, labels)
        for f in range(graph.num_features):
            s = count_stats(graph, labels, f)
            np.testing.assert_array_equal(batch.lambda_fj[f], s.lambda_fj)
            assert batch.v_f[f] == s.v_f

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            CountStats([-1, 0], 0)


class TestUpdates:
    def test_raw_precision(self):
        np.testing.assert_allclose(raw_precision(CountStats([2, 1], 0)), [2 / 3, 1 / 3])
        np.testing.assert_allclose(raw_precision(CountStats([0, 0], 0)), [0.5, 0.5])
        np.testing.assert_allclose(raw_precision(CountStats([3, 0], 0)), [1, 0])

    def test_smoothed_precision(self):
        np.testing.assert_allclose(smoothed_precision(CountStats([2, 1], 0), 0.5), [0.625, 0.375])
        np.testing.assert_allclose(smoothed_precision(CountStats([0, 0], 0), 1.0), [0.5, 0.5])

    def test_dl1_update(self):
        np.testing.assert_allclose(dl1_update(CountStats([2, 0], 2)), [0.75, 0.25])
        np.testing.assert_allclose(dl1_update(CountStats([0, 0], 3)), [0.5, 0.5])

    def test_dl1_reduces_to_raw_precision_without_unlabeled(self):
        s = CountStats([4, 1, 2], 0)
        np.testing.assert_allclose(dl1_update(s), raw_precision(s))

    def test_dl2s_update(self):
        np.testing.assert_allclose(dl2s_update(CountStats([2, 0], 2), 1.0), [0.625, 0.375])
        np.testing.assert_allclose(dl2s_update(CountStats([2, 0], 2), 0.0), [0.75, 0.25])
        np.testing.assert_allclose(dl2s_update(CountStats([1, 0], 0), 0.5), [5 / 6, 1 / 6])

    def test_updates_are_distributions(self):
        rng = np.random.default_rng(5)
        lam = rng.integers(0, 6, size=(500, 4))
        v = rng.integers(0, 6, size=500)
        s = CountStats(lam, v)
        for theta in (raw_precision(s), smoothed_precision(s, 0.1), dl1_update(s), dl2s_update(s, 0.7)):
            np.testing.assert_allclose(theta.sum(axis=1), 1.0)
            assert np.all(theta >= 0)
        assert np.all(dl2s_update(s, 0.7) > 0)


class TestPredictions:
    def test_dl0(self):
        theta, graph = one_instance(A)
        np.testing.assert_allclose(predict_dl0(theta, graph, 0), [4 / 7, 3 / 7])
        theta, graph = one_instance([[0.3, 0.7]])
        np.testing.assert_allclose(predict_dl0(theta, graph, 0), [0.3, 0.7])
        theta, graph = one_instance([[0.3, 0.7]] * 3)
        np.testing.assert_allclose(predict_dl0(theta, graph, 0), [0.3, 0.7])

    def test_dl0_all_zero_fallback(self):
        theta, graph = one_instance([[0.0, 0.0]])
        np.testing.assert_allclose(predict_dl0(theta, graph, 0), [0.5, 0.5])

    def test_dl1(self):
        theta, graph = one_instance(A)
        np.testing.assert_allclose(predict_dl1(theta, graph, 0), [0.6, 0.4])
        theta, graph = one_instance([[0.5, 0.5]] * 4)
        np.testing.assert_allclose(predict_dl1(theta, graph, 0), [0.5, 0.5])

    def test_dl2(self):
        theta, graph = one_instance(A)
        pi, z = predict_dl2(theta, graph, 0)
        np.testing.assert_allclose(pi, [8 / 11, 3 / 11])
        assert z == pytest.approx(0.44)

    def test_dl2_single_feature(self):
        theta, graph = one_instance([[0.3, 0.7]])
        pi, z = predict_dl2(theta, graph, 0)
        np.testing.assert_allclose(pi, [0.3, 0.7])
        assert z == pytest.approx(1.0)

    def test_dl2_disjoint_experts(self):
        theta, graph = one_instance([[1, 0], [0, 1]])
        pi, z = predict_dl2(theta, graph, 0)
        np.testing.assert_array_equal(pi, [0.5, 0.5])
        assert z == 0.0

    @pytest.mark.parametrize("kind", list(LearnerKind))
    def test_batched_matches_per_instance(self, kind):
        rng = np.random.default_rng(3)
        graph, _ = generate_graph(GenConfig(80, 30, 3, rng_seed=2))
        labels = random_labeling(rng, graph.num_instances, 3)
        theta = train(kind, graph, labels, SmoothingConfig(epsilon=0.2, delta=0.5))
        pi, z = predict_all(kind, theta, graph)
        for x in range(graph.num_instances):
            if kind is LearnerKind.DL0:
                expected = predict_dl0(theta, graph, x)
            elif kind is LearnerKind.DL2S:
                expected, zx = predict_dl2(theta, graph, x)
                assert z[x] == pytest.approx(zx, rel=1e-12)
            else:
                expected = predict_dl1(theta, graph, x)
            np.testing.assert_allclose(pi[x], expected, atol=1e-14)

    def test_normalizer_at_most_one(self):
        rng = np.random.default_rng(9)
        graph, _ = generate_graph(GenConfig(100, 30, 3, edges_per_instance=(1, 6), rng_seed=4))
        theta = rng.dirichlet(np.ones(3), size=graph.num_features)
        _, z = predict_all(LearnerKind.DL2S, theta, graph)
        assert np.all(z <= 1 + 1e-12)

    def test_dl2_argmax_is_max_log_sum(self):
        rng = np.random.default_rng(11)
        graph, _ = generate_graph(GenConfig(100, 30, 3, rng_seed=5))
        theta = rng.dirichlet(np.ones(3), size=graph.num_features)
        pi, _ = predict_all(LearnerKind.DL2S, theta, graph)
        for x in range(graph.num_instances):
            logsum = np.log(theta[list(graph.features_of[x])]).sum(axis=0)
            assert np.argmax(pi[x]) == np.argmax(logsum)


def test_smoothing_rejects_negative():
    with pytest.raises(ValueError):
        SmoothingConfig(delta=-1)
