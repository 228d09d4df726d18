"""Hot O(N^2) pair-interaction kernels (numba) plus a numpy reference.

Accumulation contract: for each particle i the pair contributions are summed
over j in ascending index order into a private accumulator; parallelism is
over i only.  Together with the sign-flip antisymmetry of the noise block this
makes results bit-identical for any thread or worker count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

__all__ = ["pair_step_terms", "reference_step_terms", "warmup"]


@njit(parallel=True, cache=True)
def _pair_terms(vel, block, row_off, gamma):
    n = vel.shape[0]
    drift = np.zeros_like(vel)   # sum_j B(v_i - v_j), no 2/N factor
    noise = np.zeros_like(vel)   # sum_j sigma(v_i - v_j) dZ_ij, no sqrt(2/N)
    for i in prange(n):
        vi0 = vel[i, 0]
        vi1 = vel[i, 1]
        vi2 = vel[i, 2]
        d0 = 0.0
        d1 = 0.0
        d2 = 0.0
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        for j in range(n):
            if j == i:
                continue
            z0 = vi0 - vel[j, 0]
            z1 = vi1 - vel[j, 1]
            z2 = vi2 - vel[j, 2]
            r2 = z0 * z0 + z1 * z1 + z2 * z2
            if r2 == 0.0:
                continue  # kernels vanish at z = 0
            r = np.sqrt(r2)
            # |z|^gamma and |z|^(1+gamma/2); cheap forms for the common gammas
            if gamma == 0.0:
                rg = 1.0
                sig = r
            elif gamma == 1.0:
                rg = r
                sig = r * np.sqrt(r)
            elif gamma == 0.5:
                rg = np.sqrt(r)
                sig = r * np.sqrt(rg)
            else:
                rg = r ** gamma
                sig = r ** (1.0 + 0.5 * gamma)
            m2rg = -2.0 * rg
            d0 += m2rg * z0
            d1 += m2rg * z1
            d2 += m2rg * z2
            if i < j:
                idx = row_off[i] + j - i - 1
                w0 = block[idx, 0]
                w1 = block[idx, 1]
                w2 = block[idx, 2]
            else:
                idx = row_off[j] + i - j - 1
                w0 = -block[idx, 0]
                w1 = -block[idx, 1]
                w2 = -block[idx, 2]
            # sigma(z) w = |z|^(1+g/2) (w - z (z.w)/|z|^2)
            zw = (z0 * w0 + z1 * w1 + z2 * w2) / r2
            s0 += sig * (w0 - z0 * zw)
            s1 += sig * (w1 - z1 * zw)
            s2 += sig * (w2 - z2 * zw)
        drift[i, 0] = d0
        drift[i, 1] = d1
        drift[i, 2] = d2
        noise[i, 0] = s0
        noise[i, 1] = s1
        noise[i, 2] = s2
    return drift, noise


def pair_step_terms(vel: np.ndarray, block: np.ndarray, row_off: np.ndarray,
                    gamma: float):
    """Raw drift and noise sums for one Euler-Maruyama step.

    vel (N,3), block (N(N-1)/2, 3) pair increments for i < j, row_off from
    noise.row_offsets(N).  Returns (drift_sum, noise_sum), both (N,3), without
    the 2/N resp. sqrt(2/N) prefactors.
    """
    return _pair_terms(
        np.ascontiguousarray(vel, dtype=np.float64),
        np.ascontiguousarray(block, dtype=np.float64),
        row_off,
        float(gamma),
    )


def reference_step_terms(vel: np.ndarray, w_full: np.ndarray, gamma: float):
    """Slow numpy oracle used by tests.

    w_full is the full antisymmetric increment tensor (N, N, 3) with
    w_full[j, i] == -w_full[i, j].  Same return convention as pair_step_terms.
    """
    vel = np.asarray(vel, dtype=np.float64)
    n = vel.shape[0]
    z = vel[:, None, :] - vel[None, :, :]          # (N, N, 3), z[i,j] = v_i - v_j
    r2 = np.sum(z * z, axis=-1)
    off = r2 > 0.0
    r = np.sqrt(np.where(off, r2, 1.0))
    rg = np.where(off, r ** gamma, 0.0)
    drift = np.sum(-2.0 * rg[..., None] * z, axis=1)
    sig = np.where(off, r ** (1.0 + 0.5 * gamma), 0.0)
    zw = np.sum(z * w_full, axis=-1) / np.where(off, r2, 1.0)
    contrib = sig[..., None] * (w_full - z * zw[..., None])
    contrib[~off] = 0.0
    noise = np.sum(contrib, axis=1)
    return drift, noise


def warmup(gamma: float = 0.5) -> None:
    """Force numba compilation so timed runs exclude JIT cost."""
    from .noise import row_offsets

    vel = np.array([[0.1, 0.0, 0.0], [-0.1, 0.2, 0.0], [0.0, 0.0, 0.3]])
    block = np.zeros((3, 3))
    pair_step_terms(vel, block, row_offsets(3), gamma)
