import json

import numpy as np
import pytest

from whitney.classify import (
    ClassModel,
    classify,
    evaluate,
    fit_class_models,
    knn,
    raw_model,
    reconstruct,
)
from whitney.errors import CountTooLarge, EmptyTestSet, NoModels, TooFewPoints, UnknownLabel
from whitney.optimizer import SearchConfig

from conftest import random_frame
from oracles import brute_knn

FAST = SearchConfig(max_iterations=30)


def subspace_cloud(rng, m, k, n, offset=0.0):
    basis = np.linalg.qr(rng.standard_normal((m, k)))[0]
    return rng.standard_normal((n, k)) @ basis.T + offset


class TestKnn:
    def test_exact_match(self, rng):
        R = rng.standard_normal((20, 3))
        assert list(knn(R[7], R, 1)) == [7]

    def test_line(self):
        assert list(knn([0.4], [[0.0], [1.0], [10.0]], 2)) == [0, 1]

    def test_ties_by_index(self):
        R = [[1.0], [-1.0], [1.0], [3.0]]
        assert list(knn([0.0], R, 3)) == [0, 1, 2]

    @pytest.mark.parametrize("seed", range(5))
    def test_brute_force(self, seed):
        g = np.random.default_rng(seed)
        R = g.standard_normal((200, 4))
        q = g.standard_normal(4)
        assert list(knn(q, R, 15)) == brute_knn(q, R, 15)

    def test_brute_force_with_ties(self):
        g = np.random.default_rng(1)
        R = g.integers(-2, 3, size=(100, 2)).astype(float)
        q = np.zeros(2)
        assert list(knn(q, R, 17)) == brute_knn(q, R, 17)

    def test_too_many(self):
        with pytest.raises(CountTooLarge):
            knn([0.0], [[1.0]], 2)


class TestReconstruct:
    def setup_method(self):
        g = np.random.default_rng(3)
        self.X = g.standard_normal((30, 6))
        self.model = ClassModel("a", random_frame(g, 6, 2), self.X)

    def test_training_point(self):
        np.testing.assert_array_equal(reconstruct(self.X[4], self.model, 1), self.X[4])

    def test_all_neighbours_is_centroid(self):
        r = reconstruct(np.ones(6), self.model, 30)
        np.testing.assert_allclose(r, self.X.mean(axis=0), atol=1e-15)

    def test_convex_combination(self):
        q = np.random.default_rng(0).standard_normal(6)
        idx = knn(self.model.project(q), self.model.reduced_points, 5)
        r = reconstruct(q, self.model, 5)
        sel = self.X[idx]
        assert np.all(r >= sel.min(axis=0) - 1e-15)
        assert np.all(r <= sel.max(axis=0) + 1e-15)

    def test_reduced_points_invariant(self):
        ref = np.array([self.model.frame.T @ x for x in self.X])
        assert np.max(np.abs(self.model.reduced_points - ref)) <= 1e-12


class TestFit:
    def test_two_linear_classes(self, rng):
        clouds = {0: subspace_cloud(rng, 8, 2, 30), 1: subspace_cloud(rng, 8, 2, 30)}
        models = fit_class_models(clouds, k=2, prune_count=5, cfg=FAST)
        assert [mdl.label for mdl in models] == [0, 1]
        for mdl in models:
            assert mdl.distortion <= 1e-10

    def test_threads_same_result(self, rng):
        clouds = {c: rng.standard_normal((20, 5)) for c in range(3)}
        a = fit_class_models(clouds, k=2, prune_count=4, cfg=FAST)
        b = fit_class_models(clouds, k=2, prune_count=4, cfg=FAST, threads=3)
        for x, y in zip(a, b):
            assert np.array_equal(x.frame.entries, y.frame.entries)

    def test_single_point_class(self, rng):
        clouds = {"ok": rng.standard_normal((10, 4)), "lonely": rng.standard_normal((1, 4))}
        with pytest.raises(TooFewPoints, match="lonely"):
            fit_class_models(clouds, k=2, prune_count=3, cfg=FAST)


class TestClassify:
    def test_training_point(self, rng):
        A = subspace_cloud(rng, 10, 2, 20)
        B = subspace_cloud(rng, 10, 2, 20, offset=50.0)
        models = fit_class_models({"A": A, "B": B}, k=2, prune_count=5, cfg=FAST)
        lab, res = classify(B[3], models, nn_count=1)
        assert lab == "B"
        assert res["B"] == 0.0

    def test_single_model(self, rng):
        mdl = raw_model(5, rng.standard_normal((10, 3)))
        for _ in range(5):
            assert classify(rng.standard_normal(3), [mdl], 3)[0] == 5

    def test_no_models(self):
        with pytest.raises(NoModels):
            classify(np.zeros(3), [], 1)

    def test_order_invariant(self, rng):
        models = [raw_model(c, rng.standard_normal((15, 4)) + c) for c in range(4)]
        q = rng.standard_normal(4)
        assert classify(q, models, 3) == classify(q, models[::-1], 3)

    def test_gaussian_clusters(self):
        g = np.random.default_rng(42)
        m = 20
        shift = np.zeros(m)
        shift[0] = 10.0
        train = {0: g.standard_normal((100, m)), 1: g.standard_normal((100, m)) + shift}
        models = fit_class_models(train, k=3, prune_count=10, cfg=FAST)
        y = g.integers(0, 2, 200)
        X = g.standard_normal((200, m)) + y[:, None] * shift
        report = evaluate(models, X, y, nn_count=15)
        assert report.error_rate <= 0.01


class TestEvaluate:
    def test_training_union_zero_error(self, rng):
        A = subspace_cloud(rng, 6, 2, 15)
        B = subspace_cloud(rng, 6, 2, 15, offset=30.0)
        models = fit_class_models({0: A, 1: B}, k=2, prune_count=4, cfg=FAST)
        X = np.vstack([A, B])
        y = [0] * 15 + [1] * 15
        rep = evaluate(models, X, y, nn_count=1)
        assert rep.error_rate == 0.0
        np.testing.assert_array_equal(rep.confusion, [[15, 0], [0, 15]])

    def test_report_invariants_and_json(self, rng):
        models = [raw_model(c, rng.standard_normal((10, 3)) + 2 * c) for c in range(3)]
        y = rng.integers(0, 3, 40)
        X = rng.standard_normal((40, 3)) + 2 * y[:, None]
        rep = evaluate(models, X, y, nn_count=3)
        assert 0.0 <= rep.error_rate <= 1.0
        assert np.all(rep.confusion >= 0)
        np.testing.assert_array_equal(rep.confusion.sum(axis=1), np.bincount(y, minlength=3))
        doc = json.loads(rep.to_json())
        assert doc["error_rate"] == rep.error_rate
        assert sum(doc["per_class_errors"].values()) == round(rep.error_rate * 40)
        assert doc["confusion"] == rep.confusion.tolist()

    def test_empty(self, rng):
        with pytest.raises(EmptyTestSet):
            evaluate([raw_model(0, rng.standard_normal((3, 2)))], np.empty((0, 2)), [])

    def test_unknown_label(self, rng):
        with pytest.raises(UnknownLabel):
            evaluate([raw_model(0, rng.standard_normal((3, 2)))], np.zeros((1, 2)), [7], 1)

    def test_threads_same_result(self, rng):
        models = [raw_model(c, rng.standard_normal((10, 3)) + c) for c in range(3)]
        y = rng.integers(0, 3, 30)
        X = rng.standard_normal((30, 3)) + y[:, None]
        a = evaluate(models, X, y, 3)
        b = evaluate(models, X, y, 3, threads=4)
        assert np.array_equal(a.confusion, b.confusion)
