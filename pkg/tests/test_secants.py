import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from whitney.errors import BadShape, EmptySecantSet, NotUnit, TooFewPoints, ZeroVector
from whitney.grassmann import validate_frame
from whitney.secants import (
    build_secants,
    canonical_sign,
    distortion,
    max_distortion,
    secant_set_from_vectors,
)

from conftest import random_frame, random_unit
from oracles import all_unit_secants


class TestCanonicalSign:
    def test_flips_negative(self):
        np.testing.assert_array_equal(canonical_sign([-1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])

    def test_keeps_canonical(self):
        np.testing.assert_array_equal(canonical_sign([0.6, 0.8]), [0.6, 0.8])

    def test_skips_tiny_leading(self):
        np.testing.assert_array_equal(canonical_sign([1e-13, -1.0]), [-1e-13, 1.0])

    def test_zero(self):
        with pytest.raises(ZeroVector):
            canonical_sign([0.0, 1e-13])

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 30))
    def test_idempotent(self, seed, m):
        s = random_unit(np.random.default_rng(seed), m)
        c = canonical_sign(s)
        np.testing.assert_array_equal(canonical_sign(c), c)
        assert np.array_equal(c, s) or np.array_equal(c, -s)


class TestBuildSecants:
    def test_three_points(self):
        S = build_secants([[0.0, 0.0], [1.0, 0.2], [0.3, 1.0]])
        assert len(S) == 3

    def test_collinear_dedup(self):
        S = build_secants([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        assert len(S) == 1
        np.testing.assert_array_equal(S.vectors[0], [1.0, 0.0])

    def test_invariants(self, rng):
        S = build_secants(rng.standard_normal((40, 6)))
        assert len(S) == 40 * 39 // 2
        assert np.all(np.abs(np.linalg.norm(S.vectors, axis=1) - 1) <= 1e-12)
        for v in S.vectors:
            np.testing.assert_array_equal(canonical_sign(v), v)
        # pairwise neither equal nor antipodal
        G = np.abs(S.vectors @ S.vectors.T)
        np.fill_diagonal(G, 0)
        assert G.max() < 1 - 1e-12

    def test_matches_loop_oracle(self, rng):
        X = rng.standard_normal((12, 4))
        S = build_secants(X)
        ref = np.array([canonical_sign(s) for s in all_unit_secants(X)])
        np.testing.assert_allclose(S.vectors, ref, atol=1e-15)

    @pytest.mark.parametrize("s", [1, 3, 20])
    def test_prune_bound(self, rng, s):
        X = rng.standard_normal((60, 5))
        S = build_secants(X, prune_count=s)
        assert len(S) <= s * 60
        assert len(S) >= 60 * s // 2

    def test_prune_shortest_per_point(self):
        # points on a line at 0, 1, 3, 7: each point's nearest partner
        X = np.array([[0.0, 0.0], [1.0, 0.1], [3.0, 0.0], [7.0, 0.5]])
        S = build_secants(X, prune_count=1)
        assert sorted(map(tuple, S.pairs)) == [(0, 1), (1, 2), (2, 3)]

    def test_prune_ties_smaller_index(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        S = build_secants(X, prune_count=1)
        # point 0 is equidistant from 1 and 2 and picks 1; 1 and 2 pick 0
        assert sorted(map(tuple, S.pairs)) == [(0, 1), (0, 2)]

    def test_full_prune_equals_unpruned(self, rng):
        X = rng.standard_normal((25, 4))
        a = build_secants(X)
        b = build_secants(X, prune_count=24)
        assert np.array_equal(a.vectors, b.vectors)
        assert np.array_equal(a.pairs, b.pairs)

    def test_duplicate_points_skipped(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
        S = build_secants(X)
        assert len(S) == 1
        assert S.duplicate_points == 1

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            build_secants([[1.0, 2.0]])

    def test_all_coincide(self):
        with pytest.raises(EmptySecantSet):
            build_secants([[1.0, 2.0]] * 4)

    def test_near_duplicate_tolerance(self):
        a = np.array([0.6, 0.8, 0.0])
        b = a + np.array([0.0, 0.0, 5e-13])
        b /= np.linalg.norm(b)
        c = np.array([0.6, 0.0, 0.8])
        S = secant_set_from_vectors([a, -b, c])
        assert len(S) == 2


class TestDistortion:
    def test_in_span(self, rng):
        p = random_frame(rng, 5, 2)
        assert distortion(p, p.entries[:, 0]) == pytest.approx(0.0, abs=1e-15)

    def test_orthogonal(self):
        p = validate_frame(np.eye(4)[:, :2])
        assert distortion(p, [0.0, 0.0, 1.0, 0.0]) == 1.0

    def test_half(self):
        p = validate_frame([[1.0], [0.0]])
        t = np.pi / 4
        assert distortion(p, [np.cos(t), np.sin(t)]) == pytest.approx(0.5, abs=1e-15)

    def test_errors(self, rng):
        p = random_frame(rng, 3, 1)
        with pytest.raises(BadShape):
            distortion(p, [1.0, 0.0])
        with pytest.raises(NotUnit):
            distortion(p, [1.0, 1.0, 0.0])

    def test_range(self, rng):
        for _ in range(200):
            m = rng.integers(2, 15)
            p = random_frame(rng, m, rng.integers(1, m))
            d = distortion(p, random_unit(rng, m))
            assert 0.0 <= d <= 1.0


class TestMaxDistortion:
    def test_single_in_span(self):
        p = validate_frame(np.eye(3)[:, :2])
        S = secant_set_from_vectors([[1.0, 0.0, 0.0]])
        assert max_distortion(p, S) == (0.0, 0)

    def test_in_span_and_orthogonal(self):
        p = validate_frame(np.eye(3)[:, :2])
        S = secant_set_from_vectors([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert max_distortion(p, S) == (1.0, 1)

    def test_tie_smallest_index(self):
        p = validate_frame(np.eye(3)[:, :1])
        S = secant_set_from_vectors([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        assert max_distortion(p, S) == (1.0, 0)

    def test_brute_force(self, rng):
        p = random_frame(rng, 8, 3)
        S = secant_set_from_vectors([random_unit(rng, 8) for _ in range(50)])
        vals = [distortion(p, s) for s in S.vectors]
        v, i = max_distortion(p, S)
        assert v == pytest.approx(max(vals), abs=1e-15)
        assert i == int(np.argmax(vals))

    def test_right_rotation_invariance(self, rng):
        p = random_frame(rng, 9, 4)
        S = build_secants(rng.standard_normal((20, 9)))
        Q = np.linalg.qr(rng.standard_normal((4, 4)))[0]
        pq = validate_frame(p.entries @ Q)
        assert max_distortion(pq, S)[0] == pytest.approx(max_distortion(p, S)[0], abs=1e-12)

    def test_empty(self, rng):
        from whitney.secants import SecantSet

        S = SecantSet(np.empty((0, 3)), np.empty((0, 2), dtype=int))
        with pytest.raises(EmptySecantSet):
            max_distortion(random_frame(rng, 3, 1), S)


def test_secant_csv_export_roundtrip(tmp_path, rng):
    from whitney.formats import load_csv

    S = build_secants(rng.standard_normal((8, 3)))
    S.to_csv(tmp_path / "s.csv")
    back = load_csv(tmp_path / "s.csv")
    assert np.array_equal(back, S.vectors)
