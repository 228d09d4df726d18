"""Counter-based pair noise: determinism, antisymmetry, stream layout."""

import numpy as np
import pytest

from kaclandau.noise import SUBSTREAM_STRIDE, PairNoise, derive_key, pair_rank, row_offsets


class TestPairRank:
    def test_small_table(self):
        # n=4: pairs in row-major upper-triangle order
        expected = {(0, 1): 0, (0, 2): 1, (0, 3): 2, (1, 2): 3, (1, 3): 4, (2, 3): 5}
        for (i, j), r in expected.items():
            assert pair_rank(i, j, 4) == r

    def test_bijection_sweep(self):
        for n in (2, 3, 5, 17, 40):
            ranks = [pair_rank(i, j, n) for i in range(n) for j in range(i + 1, n)]
            assert sorted(ranks) == list(range(n * (n - 1) // 2))

    def test_row_offsets_match(self):
        for n in (2, 6, 33):
            off = row_offsets(n)
            for i in range(n - 1):
                assert off[i] == pair_rank(i, i + 1, n)

    def test_invalid_pairs(self):
        with pytest.raises(ValueError):
            pair_rank(2, 2, 5)
        with pytest.raises(ValueError):
            pair_rank(3, 1, 5)
        with pytest.raises(ValueError):
            pair_rank(0, 5, 5)


class TestDeterminism:
    def test_same_key_same_block(self):
        a = PairNoise(42, 3, 16).block(7, 0.01)
        b = PairNoise(42, 3, 16).block(7, 0.01)
        np.testing.assert_array_equal(a, b)

    def test_distinct_streams(self):
        base = PairNoise(42, 0, 16).block(0, 0.01)
        assert not np.array_equal(base, PairNoise(43, 0, 16).block(0, 0.01))
        assert not np.array_equal(base, PairNoise(42, 1, 16).block(0, 0.01))
        assert not np.array_equal(base, PairNoise(42, 0, 16).block(1, 0.01))
        assert not np.array_equal(base, PairNoise(42, 0, 16).block(0, 0.01, sub=1))

    def test_key_derivation_stable(self):
        assert derive_key(0, 0) == derive_key(0, 0)
        assert derive_key(0, 0) != derive_key(0, 1)
        assert derive_key(0, 0) != derive_key(1, 0)

    def test_prefix_property(self):
        # The first n_pairs(small) rows of a wider system are NOT required to
        # match, but one system's block must be reproducible row-by-row.
        noise = PairNoise(5, 0, 12)
        block = noise.block(3, 0.04)
        for i, j in [(0, 1), (0, 11), (4, 7), (10, 11)]:
            np.testing.assert_array_equal(
                noise.increment(3, i, j, 0.04), block[pair_rank(i, j, 12)]
            )

    def test_antisymmetry(self):
        noise = PairNoise(5, 0, 12)
        for i, j in [(0, 1), (4, 7), (2, 9)]:
            fwd = noise.increment(3, i, j, 0.04)
            bwd = noise.increment(3, j, i, 0.04)
            np.testing.assert_array_equal(fwd, -bwd)

    def test_same_pair_rejected(self):
        with pytest.raises(ValueError):
            PairNoise(5, 0, 12).increment(0, 4, 4, 0.01)

    def test_substream_disjoint_from_next_step(self):
        # Sub-stream draws within a step must not collide with any base block
        # of later steps (counter layout: step in the high 64 bits).
        noise = PairNoise(9, 0, 8)
        sub = noise.block(0, 0.01, sub=1)
        for step in (0, 1, 2):
            assert not np.array_equal(sub, noise.block(step, 0.01))

    def test_max_halving_substreams_fit(self):
        # Heap layout: 8 halvings reach sub index at most 2^9 - 2 = 510; each
        # sub-stream owns SUBSTREAM_STRIDE counter ticks.
        noise = PairNoise(9, 0, 64)
        deepest = 2 ** 9 - 2
        block = noise.block(5, 0.01, sub=deepest)
        assert block.shape == (64 * 63 // 2, 3)
        assert deepest * SUBSTREAM_STRIDE < 2 ** 64


class TestStatistics:
    def test_moments_match_gaussian(self):
        # One large block ~ N(0, dt): mean, variance, and normality proxies.
        dt = 0.25
        block = PairNoise(1234, 0, 120).block(0, dt)   # 7140 x 3 draws
        flat = block.ravel()
        assert flat.mean() == pytest.approx(0.0, abs=4.0 * np.sqrt(dt / flat.size))
        assert flat.var() == pytest.approx(dt, rel=0.05)
        # standardized fourth moment of a Gaussian is 3
        z = flat / np.sqrt(dt)
        assert np.mean(z ** 4) == pytest.approx(3.0, rel=0.1)

    def test_scale_with_dt(self):
        n = PairNoise(7, 0, 10)
        a = n.block(2, 0.01)
        b = n.block(2, 0.04)
        np.testing.assert_allclose(b, 2.0 * a, rtol=1e-12)

    def test_dt_domain(self):
        with pytest.raises(ValueError):
            PairNoise(7, 0, 10).block(0, 0.0)
        with pytest.raises(ValueError):
            PairNoise(7, 0, 10).block(-1, 0.01)
        with pytest.raises(ValueError):
            PairNoise(7, 0, 1)
