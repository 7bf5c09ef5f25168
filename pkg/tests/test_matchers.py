import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from houghcl import (
    CorrespondenceMap,
    FeatureGrid,
    HoughAccumulator,
    HoughConfig,
    InvalidArgumentError,
    ViewTransform,
    argmax_match,
    ground_truth_match,
    hough_match,
    hough_rescore,
    hough_vote,
    similarity_matrix,
    warped_threshold_match,
)
from houghcl.bench import score_correspondence

from instances import planted_delta, planted_translation, unit_rows
from oracles import assert_votes_equal, brute_argmax, brute_rescore, brute_votes


def shifted_grids(rng, s, dim, dx, dy):
    """View 2 shows view 1 translated by (dx, dy) cells; fresh content elsewhere."""
    a = unit_rows(rng, s * s, dim).reshape(s, s, dim)
    b = unit_rows(rng, s * s, dim).reshape(s, s, dim)
    for r in range(s):
        for c in range(s):
            if 0 <= r - dy < s and 0 <= c - dx < s:
                b[r - dy, c - dx] = a[r, c]
    return FeatureGrid(a), FeatureGrid(b)


class TestCorrespondenceMap:
    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidArgumentError):
            CorrespondenceMap([0, 3], [1.0, 1.0], n_key=3)

    def test_equality_includes_absent(self):
        a = CorrespondenceMap([0, -1], [0.5, np.nan], 2)
        assert a == CorrespondenceMap([0, -1], [0.5, np.nan], 2)
        assert a != CorrespondenceMap([1, -1], [0.5, np.nan], 2)


class TestArgmaxMatch:
    def test_identity_pattern(self):
        corr = argmax_match(np.eye(9))
        np.testing.assert_array_equal(corr.keys, np.arange(9))
        np.testing.assert_array_equal(corr.scores, np.ones(9))

    def test_constant_row_ties_to_zero(self):
        delta = np.eye(4)
        delta[2] = 0.3
        assert argmax_match(delta).keys[2] == 0

    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            delta = rng.uniform(-1, 1, size=(16, 16))
            corr = argmax_match(delta)
            keys, scores = brute_argmax(delta)
            assert corr.keys.tolist() == keys
            assert corr.scores.tolist() == scores

    def test_never_absent(self):
        assert argmax_match(-np.ones((3, 5))).present.all()

    @given(st.integers(0, 10_000))
    def test_permutation_equivariance(self, seed):
        rng = np.random.default_rng(seed)
        delta = rng.uniform(-1, 1, size=(9, 9))
        perm = rng.permutation(9)
        permuted = argmax_match(delta[:, perm])
        np.testing.assert_array_equal(perm[permuted.keys], argmax_match(delta).keys)


class TestWarpedThresholdMatch:
    def test_same_views_identity(self):
        rng = np.random.default_rng(1)
        t = ViewTransform(0.1, 0.1, 0.8, 0.8)
        corr = warped_threshold_match(t, t, 4, 4, rng.uniform(-1, 1, (16, 16)), 0.5)
        np.testing.assert_array_equal(corr.keys, np.arange(16))

    def test_disjoint_views_absent(self):
        corr = warped_threshold_match(ViewTransform(0, 0, 0.4, 0.4), ViewTransform(0.5, 0.5, 0.5, 0.5),
                                      3, 3, np.ones((9, 9)), 2.0)
        assert not corr.present.any()
        assert np.isnan(corr.scores).all()

    def test_adversarial_delta_stays_in_radius(self):
        s, radius = 5, 1.5
        delta = np.zeros((s * s, s * s))
        delta[:, s * s - 1] = 1.0  # far corner is everyone's favorite
        delta += np.random.default_rng(2).uniform(0, 0.1, delta.shape)
        corr = warped_threshold_match(ViewTransform(), ViewTransform(), s, s, delta, radius)
        for q in range(s * s):
            qr, qc = divmod(q, s)
            cands = [k for k in range(s * s) if math.hypot(k % s - qc, k // s - qr) <= radius]
            best = max(cands, key=lambda k: (delta[q, k], -k))
            assert corr.keys[q] == best
            kr, kc = divmod(int(corr.keys[q]), s)
            assert math.hypot(kr - qr, kc - qc) <= radius

    def test_zero_radius_picks_only_exact_center(self):
        t1, t2 = ViewTransform(), ViewTransform(0.0, 0.0, 0.5, 1.0)
        corr = warped_threshold_match(t1, t2, 4, 4, np.ones((16, 16)), 0.0)
        # warped centers of view-1 columns 0,1 land on view-2 cell boundaries
        assert not corr.present.any()


class TestHoughVote:
    def test_non_positive_delta_gives_zero(self):
        acc = hough_vote(-np.abs(np.random.default_rng(3).normal(size=(9, 9))), 3, 3)
        assert acc.total == 0.0

    def test_identity_mass_at_zero_offset(self):
        acc = hough_vote(np.eye(16), 4, 4, HoughConfig(vote_exponent=1))
        assert acc.lookup(0, 0) == 16.0
        assert acc.total == 16.0

    def test_covers_all_offsets(self):
        acc = hough_vote(np.ones((12, 12)), 3, 4, HoughConfig(bin_width=0.7))
        assert acc.counts.shape[0] == acc.counts.shape[1]
        by, bx = acc.bin_index(np.array([-3, 3]), np.array([-3, 3]))
        assert by.min() >= 0 and bx.max() < acc.counts.shape[1]

    @pytest.mark.parametrize("cfg", [
        HoughConfig(),
        HoughConfig(vote_exponent=1),
        HoughConfig(bin_width=1.7, vote_exponent=3, top_k=2),
        HoughConfig(bin_width=0.5, min_similarity=0.2),
        HoughConfig(smoothing_radius=1),
        HoughConfig(smoothing_radius=2, top_k=4, bin_width=2.0),
    ])
    def test_matches_brute_force(self, cfg):
        rng = np.random.default_rng(4)
        for _ in range(10):
            delta = rng.uniform(-1, 1, size=(9, 9))
            assert_votes_equal(hough_vote(delta, 3, 3, cfg), brute_votes(delta, 3, 3, cfg))

    def test_top_k_ties_go_to_lowest_index(self):
        delta = np.full((4, 4), 0.5)
        acc = hough_vote(delta, 2, 2, HoughConfig(top_k=1, vote_exponent=1))
        # every query votes only for key 0
        assert_votes_equal(acc, {(0, 0): 0.5, (-1, 0): 0.5, (0, -1): 0.5, (-1, -1): 0.5})

    @settings(max_examples=50)
    @given(st.integers(0, 10_000), st.integers(0, 3), st.sampled_from([1.0, 2.0, 3.5]))
    def test_total_mass_independent_of_smoothing(self, seed, radius, p):
        rng = np.random.default_rng(seed)
        delta = rng.uniform(-1, 1, size=(16, 16))
        cfg = HoughConfig(vote_exponent=p, smoothing_radius=radius)
        expected = np.sum(np.maximum(delta, 0) ** p)
        assert abs(hough_vote(delta, 4, 4, cfg).total - expected) <= 1e-9

    def test_shape_check(self):
        with pytest.raises(InvalidArgumentError):
            hough_vote(np.zeros((8, 8)), 3, 3)


class TestHoughRescore:
    def test_uniform_accumulator_preserves_argmax(self):
        rng = np.random.default_rng(5)
        delta = rng.uniform(-1, 1, size=(16, 16))
        acc = hough_vote(delta, 4, 4)
        uniform = HoughAccumulator(np.full_like(acc.counts, 2.5), acc.bin_width, acc.half)
        m = hough_rescore(delta, uniform, 4, 4)
        np.testing.assert_array_equal(m, delta)

    def test_single_zero_offset_bin(self):
        delta = np.random.default_rng(6).uniform(0.1, 1, size=(9, 9))
        acc = hough_vote(delta, 3, 3)
        counts = np.zeros_like(acc.counts)
        counts[acc.half, acc.half] = 3.0
        m = hough_rescore(delta, HoughAccumulator(counts, acc.bin_width, acc.half), 3, 3)
        np.testing.assert_array_equal(m, np.diag(np.diag(delta)))

    def test_zero_accumulator_falls_back(self):
        delta = -np.random.default_rng(7).uniform(0, 1, size=(9, 9))
        acc = hough_vote(delta, 3, 3)
        np.testing.assert_array_equal(hough_rescore(delta, acc, 3, 3), delta)

    def test_matches_elementwise_loop(self):
        rng = np.random.default_rng(8)
        for cfg in (HoughConfig(), HoughConfig(bin_width=1.5, smoothing_radius=1)):
            delta = rng.uniform(-1, 1, size=(16, 16))
            acc = hough_vote(delta, 4, 4, cfg)
            np.testing.assert_allclose(hough_rescore(delta, acc, 4, 4, cfg),
                                       brute_rescore(delta, acc, 4, 4), rtol=0, atol=1e-12)


class TestHoughMatch:
    def test_orthonormal_identical_grids(self):
        g = FeatureGrid(np.eye(16).reshape(4, 4, 16))
        corr = hough_match(similarity_matrix(g, g), 4, 4)
        np.testing.assert_array_equal(corr.keys, np.arange(16))

    def test_fallback_equals_argmax(self):
        delta = -np.random.default_rng(9).uniform(0, 1, size=(16, 16))
        cfg = HoughConfig(vote_exponent=1)
        assert hough_match(delta, 4, 4, cfg) == argmax_match(delta)

    @pytest.mark.parametrize("seed", range(5))
    def test_planted_delta_recovers_shift(self, seed):
        delta, truth, corrupted, spurious = planted_delta(seed)
        wta = argmax_match(delta)
        hough = hough_match(delta, 7, 7)
        for q in corrupted:
            assert wta.keys[q] == spurious[int(q)]
            assert hough.keys[q] == truth[q]

    @pytest.mark.parametrize("seed", range(5))
    def test_planted_features_recover_shift(self, seed):
        ga, gb, truth, corrupted = planted_translation(seed)
        delta = similarity_matrix(ga, gb)
        wta = argmax_match(delta)
        hough = hough_match(delta, 7, 7, HoughConfig(bin_width=1, vote_exponent=2))
        assert np.all(wta.keys[corrupted] != truth[corrupted])
        np.testing.assert_array_equal(hough.keys[corrupted], truth[corrupted])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10_000), st.floats(1e-6, 1e6))
    def test_accumulator_scaling_invariance(self, seed, c):
        rng = np.random.default_rng(seed)
        delta = rng.uniform(-1, 1, size=(25, 25))
        acc = hough_vote(delta, 5, 5)
        scaled, base = hough_match(delta, 5, 5, acc=acc.scaled(c)), hough_match(delta, 5, 5, acc=acc)
        np.testing.assert_array_equal(scaled.keys, base.keys)
        # (c*a)/(c*m) may differ from a/m in the last ulp; decisions may not
        np.testing.assert_allclose(scaled.scores, base.scores, rtol=1e-14, atol=0)

    @given(st.integers(0, 10_000), st.floats(0.1, 10))
    def test_constant_accumulator_reduces_to_argmax(self, seed, level):
        rng = np.random.default_rng(seed)
        delta = rng.uniform(-1, 1, size=(16, 16))
        acc = hough_vote(delta, 4, 4)
        const = HoughAccumulator(np.full_like(acc.counts, level), acc.bin_width, acc.half)
        assert hough_match(delta, 4, 4, acc=const) == argmax_match(delta)

    @pytest.mark.parametrize("dx,dy", [(0, 0), (1, 0), (-2, 1), (0, -3), (2, 2)])
    def test_pure_translation_completeness(self, dx, dy):
        s = 7
        rng = np.random.default_rng([10, dx + 3, dy + 3])
        ga, gb = shifted_grids(rng, s, 16, dx, dy)
        t1 = ViewTransform(0.3, 0.3, 0.4, 0.4)
        t2 = ViewTransform(0.3 + dx * 0.4 / s, 0.3 + dy * 0.4 / s, 0.4, 0.4)
        oracle = ground_truth_match(t1, t2, s, s)
        delta = similarity_matrix(ga, gb)
        assert score_correspondence(argmax_match(delta), oracle)[0] == 1.0
        assert score_correspondence(hough_match(delta, s, s), oracle)[0] == 1.0

    def test_deterministic(self):
        delta = np.random.default_rng(11).uniform(-1, 1, size=(49, 49))
        cfg = HoughConfig(smoothing_radius=1)
        a, b = hough_match(delta, 7, 7, cfg), hough_match(delta.copy(), 7, 7, cfg)
        assert a.keys.tobytes() == b.keys.tobytes() and a.scores.tobytes() == b.scores.tobytes()


class TestHoughConfig:
    @pytest.mark.parametrize("kwargs", [
        {"bin_width": 0}, {"vote_exponent": 0.5}, {"smoothing_radius": -1},
        {"top_k": 0}, {"min_similarity": 1.5},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            HoughConfig(**kwargs)
