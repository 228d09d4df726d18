"""Counter-based Gaussian increments for particle pairs.

Every unordered pair (i < j) of an N-particle system owns one Philox counter
tick per time step:

    key     = SeedSequence((seed, replica, 1))  -> 128-bit Philox key
    counter = (step << 64) + pair_rank(i, j)

One tick yields four 64-bit words; Box-Muller turns the first four uniforms
into four standard normals of which three form the pair increment (the fourth
is discarded so that ranks stay addressable).  This gives O(1) random access:
the increment of any (seed, replica, step, pair) can be regenerated exactly,
which is what the antisymmetry contract dZ[j,i] == -dZ[i,j] and bit-exact
resume rely on.  Whole-step blocks are generated with a single bulk raw call.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange
from numpy.random import Philox, SeedSequence

__all__ = ["PairNoise", "pair_rank", "row_offsets", "derive_key"]

_U53 = 1.0 / 9007199254740992.0  # 2^-53
_TWO_PI = 2.0 * np.pi

# Counter sub-ranges inside one step: sub-stream s starts at (s << 32), so the
# primary block (s = 0) and any rejection sub-steps never collide for N < 92680.
SUBSTREAM_STRIDE = 1 << 32


@njit(parallel=True, cache=True)
def _words_to_normals(words, out, scale):
    # words: (P, 4) uint64, out: (P, 3) float64. Box-Muller on 53-bit uniforms.
    p = words.shape[0]
    for r in prange(p):
        u0 = (np.float64(words[r, 0] >> np.uint64(11)) + 1.0) * _U53
        u1 = (np.float64(words[r, 1] >> np.uint64(11)) + 1.0) * _U53
        u2 = (np.float64(words[r, 2] >> np.uint64(11)) + 1.0) * _U53
        u3 = (np.float64(words[r, 3] >> np.uint64(11)) + 1.0) * _U53
        rad0 = np.sqrt(-2.0 * np.log(u0)) * scale
        rad1 = np.sqrt(-2.0 * np.log(u2)) * scale
        out[r, 0] = rad0 * np.cos(_TWO_PI * u1)
        out[r, 1] = rad0 * np.sin(_TWO_PI * u1)
        out[r, 2] = rad1 * np.cos(_TWO_PI * u3)


def pair_rank(i: int, j: int, n: int) -> int:
    """Rank of the unordered pair (i < j) in row-major upper-triangle order."""
    if not (0 <= i < j < n):
        raise ValueError(f"pair indices must satisfy 0 <= i < j < n, got ({i}, {j}), n={n}")
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def row_offsets(n: int) -> np.ndarray:
    """row_offsets[i] = rank of pair (i, i+1); int64 array of length n."""
    i = np.arange(n, dtype=np.int64)
    return i * (2 * n - i - 1) // 2


def derive_key(seed: int, replica: int) -> int:
    """128-bit Philox key for one (seed, replica) noise stream."""
    state = SeedSequence((int(seed), int(replica), 1)).generate_state(2, np.uint64)
    return int(state[0]) | (int(state[1]) << 64)


class PairNoise:
    """Deterministic antisymmetric Brownian pair increments for one replica."""

    def __init__(self, seed: int, replica: int, n: int):
        if n < 2:
            raise ValueError(f"need at least 2 particles, got n={n}")
        self.seed = int(seed)
        self.replica = int(replica)
        self.n = int(n)
        self.n_pairs = n * (n - 1) // 2
        self._key = derive_key(seed, replica)
        self._row_offsets = row_offsets(n)

    @property
    def row_offset_table(self) -> np.ndarray:
        return self._row_offsets

    def _counter(self, step: int, sub: int) -> int:
        if step < 0:
            raise ValueError(f"step must be non-negative, got {step}")
        return (int(step) << 64) + int(sub) * SUBSTREAM_STRIDE

    def block(self, step: int, dt: float, sub: int = 0) -> np.ndarray:
        """All pair increments for one step: (n_pairs, 3), each ~ N(0, dt I).

        Row r is dZ[i, j] for the rank-r pair (i < j); the (j, i) increment is
        its exact negation.  `sub` > 0 selects the fresh sub-streams used by
        adaptive step halving.
        """
        if dt <= 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        words = Philox(key=self._key, counter=self._counter(step, sub)).random_raw(
            4 * self.n_pairs
        )
        words = words.reshape(self.n_pairs, 4)
        out = np.empty((self.n_pairs, 3), dtype=np.float64)
        _words_to_normals(words, out, np.sqrt(dt))
        return out

    def increment(self, step: int, i: int, j: int, dt: float, sub: int = 0) -> np.ndarray:
        """Regenerate the single increment dZ[i, j] without building a block."""
        if i == j:
            raise ValueError("pair increment requires two distinct particles")
        lo, hi = (i, j) if i < j else (j, i)
        rank = pair_rank(lo, hi, self.n)
        words = Philox(
            key=self._key, counter=self._counter(step, sub) + rank
        ).random_raw(4)
        out = np.empty((1, 3), dtype=np.float64)
        _words_to_normals(words.reshape(1, 4), out, np.sqrt(dt))
        z = out[0]
        return z if i < j else -z
