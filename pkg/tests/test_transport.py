"""Tests for empirical Wasserstein-2 distances (exact, sliced, grouped)."""

import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kaclandau.transport import (
    W2_EXACT_MAX_POINTS,
    EmpiricalCloud,
    subsample_cloud,
    w2_exact,
    w2_group_estimate,
    w2_sliced,
)


def brute_w2(a, b):
    """Minimum over all assignments, directly from the definition."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    k = a.shape[0]
    best = np.inf
    for perm in itertools.permutations(range(k)):
        cost = np.mean(np.sum((a - b[list(perm)]) ** 2, axis=1))
        best = min(best, cost)
    return float(np.sqrt(best))


class TestCloud:
    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError, match="k, d"):
            EmpiricalCloud(np.zeros(5))
        with pytest.raises(ValueError, match="k, d"):
            EmpiricalCloud(np.zeros((0, 3)))

    def test_rejects_non_finite(self):
        pts = np.zeros((4, 3))
        pts[2, 1] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            EmpiricalCloud(pts)

    def test_point_count(self):
        assert EmpiricalCloud(np.zeros((7, 3))).k == 7


class TestExact:
    def test_identical_clouds_zero(self):
        rng = np.random.default_rng(7)
        pts = rng.standard_normal((50, 3))
        assert w2_exact(pts, pts.copy()) == 0.0

    def test_translation_is_shift_norm(self):
        rng = np.random.default_rng(11)
        pts = rng.standard_normal((64, 3))
        shifted = pts + np.array([1.0, 0.0, 0.0])
        assert_allclose(w2_exact(pts, shifted), 1.0, rtol=1e-12)

    def test_pinned_line_example(self):
        a = np.array([[0.0], [2.0]])
        b = np.array([[1.0], [3.0]])
        assert_allclose(w2_exact(a, b), 1.0, rtol=1e-12)

    def test_matches_brute_force_small(self):
        rng = np.random.default_rng(23)
        for k in (2, 3, 4, 5, 6):
            for _ in range(5):
                a = rng.standard_normal((k, 3))
                b = rng.standard_normal((k, 3))
                assert_allclose(w2_exact(a, b), brute_w2(a, b), rtol=1e-12)

    def test_accepts_cloud_objects(self):
        rng = np.random.default_rng(3)
        pts = rng.standard_normal((10, 3))
        assert w2_exact(EmpiricalCloud(pts), EmpiricalCloud(pts)) == 0.0

    def test_unequal_counts_rejected(self):
        with pytest.raises(ValueError, match="equal point counts"):
            w2_exact(np.zeros((4, 3)), np.zeros((5, 3)))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            w2_exact(np.zeros((4, 3)), np.zeros((4, 2)))

    def test_large_cloud_refused_pointing_at_sliced(self):
        k = W2_EXACT_MAX_POINTS + 1
        pts = np.zeros((k, 3))
        with pytest.raises(ValueError, match="w2_sliced"):
            w2_exact(pts, pts)

    def test_triangle_inequality_sweep(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            a = rng.standard_normal((16, 3))
            b = rng.standard_normal((16, 3))
            c = rng.standard_normal((16, 3))
            assert w2_exact(a, c) <= w2_exact(a, b) + w2_exact(b, c) + 1e-12


class TestSliced:
    def test_identical_clouds_zero(self):
        rng = np.random.default_rng(5)
        pts = rng.standard_normal((200, 3))
        assert w2_sliced(pts, pts.copy()) == 0.0

    def test_translation_scales_by_sqrt_dim(self):
        # along direction theta a rigid shift u moves every projected point by
        # u.theta, so the squared sliced distance averages (u.theta)^2 = |u|^2/3
        rng = np.random.default_rng(13)
        pts = rng.standard_normal((256, 3))
        u = np.array([0.8, -0.3, 0.5])
        val, se = w2_sliced(pts, pts + u, n_projections=512, seed=2,
                            return_stderr=True)
        assert abs(val - np.linalg.norm(u) / np.sqrt(3.0)) <= 3.0 * se

    def test_lower_bounds_exact(self):
        rng = np.random.default_rng(17)
        for trial in range(10):
            a = rng.standard_normal((64, 3))
            b = rng.standard_normal((64, 3)) + 0.2 * trial
            exact = w2_exact(a, b)
            val, se = w2_sliced(a, b, n_projections=512, seed=trial,
                                return_stderr=True)
            assert val <= exact + 3.0 * se

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(19)
        a = rng.standard_normal((100, 3))
        b = rng.standard_normal((100, 3))
        assert w2_sliced(a, b, seed=42) == w2_sliced(a, b, seed=42)
        assert w2_sliced(a, b, seed=42) != w2_sliced(a, b, seed=43)

    def test_handles_clouds_beyond_exact_cap(self):
        rng = np.random.default_rng(29)
        k = W2_EXACT_MAX_POINTS + 256
        a = rng.standard_normal((k, 3))
        val = w2_sliced(a, a + np.array([1.0, 0.0, 0.0]), n_projections=64)
        assert 0.3 <= val <= 0.9          # near 1/sqrt(3)

    def test_unequal_counts_rejected(self):
        with pytest.raises(ValueError, match="equal point counts"):
            w2_sliced(np.zeros((4, 3)), np.zeros((5, 3)))

    def test_bad_projection_count_rejected(self):
        with pytest.raises(ValueError, match="n_projections"):
            w2_sliced(np.zeros((4, 3)), np.zeros((4, 3)), n_projections=0)

    def test_stderr_zero_for_identical(self):
        pts = np.ones((8, 3))
        val, se = w2_sliced(pts, pts, return_stderr=True)
        assert val == 0.0 and se == 0.0


class TestSubsample:
    def test_identity_under_cap(self):
        rng = np.random.default_rng(37)
        pts = rng.standard_normal((100, 3))
        out = subsample_cloud(pts, cap=100)
        assert out is not pts or out.shape == pts.shape
        assert_allclose(out, pts)

    def test_subsample_is_subset_and_deterministic(self):
        rng = np.random.default_rng(41)
        pts = rng.standard_normal((500, 3))
        out1 = subsample_cloud(pts, cap=64, seed=9)
        out2 = subsample_cloud(pts, cap=64, seed=9)
        assert out1.shape == (64, 3)
        assert_allclose(out1, out2)
        # every row appears in the original cloud
        for row in out1:
            assert np.any(np.all(pts == row, axis=1))


class TestGroupEstimate:
    def test_translation_recovered_with_stderr(self):
        rng = np.random.default_rng(43)
        samples_a = rng.standard_normal((8, 128, 3))
        samples_b = samples_a + np.array([0.5, 0.0, 0.0])
        mean, stderr = w2_group_estimate(samples_a, samples_b, groups=4)
        assert_allclose(mean, 0.5, rtol=1e-10)
        assert stderr <= 1e-10

    def test_independent_clouds_positive(self):
        rng = np.random.default_rng(47)
        samples_a = rng.standard_normal((8, 64, 3))
        samples_b = rng.standard_normal((8, 64, 3))
        mean, stderr = w2_group_estimate(samples_a, samples_b, groups=4)
        assert mean > 0.0
        assert np.isfinite(stderr) and stderr >= 0.0

    def test_rejects_non_stacked_input(self):
        with pytest.raises(ValueError, match=r"\(R, N, d\)"):
            w2_group_estimate(np.zeros((8, 3)), np.zeros((8, 3)))

    def test_single_group_zero_stderr(self):
        rng = np.random.default_rng(53)
        samples = rng.standard_normal((2, 32, 3))
        mean, stderr = w2_group_estimate(samples, samples, groups=1)
        assert mean == 0.0 and stderr == 0.0
