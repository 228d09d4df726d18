"""Pairwise interaction kernels for the conservative Landau particle system.

For a relative velocity z in R^3 and hard-potential exponent gamma in [0, 1]
(gamma = 0 is the Maxwellian case) the kernels are

    Pi(z)    = Id - (z tensor z) / |z|^2        orthogonal projector onto z-perp
    A(z)     = |z|^(gamma+2) Pi(z)              diffusion matrix
    B(z)     = -2 z |z|^gamma                   drift vector
    sigma(z) = |z|^(1+gamma/2) Pi(z)            noise matrix, sigma sigma^T = A

all extended by 0 at z = 0.  A is symmetric positive semi-definite with
A(z) z = 0; B is odd and sigma is even in z, which is what makes the pair
dynamics conserve momentum and kinetic energy exactly.

The module also provides the sharpened Povzner-type inequality gap used by the
moment machinery, and the Lipschitz-modulus ratios of B and sigma that the
coupling estimates rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PairKernelValue",
    "eval_pair_kernels",
    "pair_a",
    "pair_b",
    "pair_sigma",
    "povzner_sides",
    "povzner_gap",
    "kernel_modulus_ratio",
]

# Above this magnitude povzner_gap switches to signed log-space accumulation.
_POVZNER_LOG_SWITCH = 1.0e3
_LOG_FLOAT_MAX = np.log(np.finfo(np.float64).max)


def _check_gamma(gamma: float, *, positive: bool = False) -> float:
    gamma = float(gamma)
    lo = 0.0
    if positive and gamma <= 0.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if gamma < lo or gamma > 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    return gamma


@dataclass(frozen=True)
class PairKernelValue:
    """Kernel triple evaluated at one relative velocity."""

    a_matrix: np.ndarray      # (3, 3) diffusion matrix A(z)
    b_vector: np.ndarray      # (3,)   drift vector B(z)
    sigma_matrix: np.ndarray  # (3, 3) noise matrix sigma(z)


def _as_z(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != 3:
        raise ValueError(f"relative velocity must have last dimension 3, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("relative velocity contains non-finite entries")
    return z


def _projector(z: np.ndarray) -> np.ndarray:
    # Pi(z) = I - zz^T/|z|^2, zero matrix at z = 0.  Batched over leading axes.
    r2 = np.sum(z * z, axis=-1)
    eye = np.broadcast_to(np.eye(3), z.shape[:-1] + (3, 3)).copy()
    safe = np.where(r2 > 0.0, r2, 1.0)
    outer = z[..., :, None] * z[..., None, :] / safe[..., None, None]
    pi = eye - outer
    pi[r2 == 0.0] = 0.0
    return pi


def pair_a(z, gamma: float) -> np.ndarray:
    """Diffusion matrix A(z) = |z|^(gamma+2) Pi(z); batched over leading axes."""
    gamma = _check_gamma(gamma)
    z = _as_z(z)
    r = np.sqrt(np.sum(z * z, axis=-1))
    return r[..., None, None] ** (gamma + 2.0) * _projector(z)


def pair_b(z, gamma: float) -> np.ndarray:
    """Drift vector B(z) = -2 z |z|^gamma; batched over leading axes."""
    gamma = _check_gamma(gamma)
    z = _as_z(z)
    r = np.sqrt(np.sum(z * z, axis=-1))
    if gamma == 0.0:
        # |z|^0 := 1 away from 0; the prefactor z already vanishes at z = 0.
        return -2.0 * z
    return -2.0 * z * r[..., None] ** gamma


def pair_sigma(z, gamma: float) -> np.ndarray:
    """Noise matrix sigma(z) = |z|^(1+gamma/2) Pi(z); batched over leading axes."""
    gamma = _check_gamma(gamma)
    z = _as_z(z)
    r = np.sqrt(np.sum(z * z, axis=-1))
    return r[..., None, None] ** (1.0 + 0.5 * gamma) * _projector(z)


def eval_pair_kernels(z, gamma: float) -> PairKernelValue:
    """Evaluate (A, B, sigma) at a single relative velocity z."""
    z = _as_z(z)
    if z.shape != (3,):
        raise ValueError(f"eval_pair_kernels expects a single 3-vector, got shape {z.shape}")
    return PairKernelValue(
        a_matrix=pair_a(z, gamma),
        b_vector=pair_b(z, gamma),
        sigma_matrix=pair_sigma(z, gamma),
    )


def _check_povzner_domain(x, y, p, gamma):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if np.any(x < 0.0) or np.any(y < 0.0):
        raise ValueError("povzner arguments x, y must be non-negative speeds")
    if np.any(p < 4.0):
        raise ValueError("povzner moment order p must be >= 4")
    # gamma may vary per sample here (pure arithmetic, unlike the kernels)
    gamma = np.asarray(gamma, dtype=np.float64)
    if np.any(gamma <= 0.0) or np.any(gamma > 1.0):
        raise ValueError("gamma must lie in (0, 1] for the Povzner estimate")
    return x, y, p, gamma


def povzner_sides(x, y, p, gamma: float):
    """Both sides of the sharpened Povzner inequality, direct arithmetic.

    lhs = (-x^p - y^p + (p/2) x^(p-2) y^2 + (p/2) y^(p-2) x^2) |x - y|^gamma
    rhs = -x^(p+gamma)/2 - y^(p+gamma)/2 + x^p y^gamma + y^p x^gamma
          + p^(1+gamma/2) (x^(p-2+gamma) y^2 + y^(p-2+gamma) x^2)

    Vectorized over x, y, p.  Raises OverflowError when either side leaves the
    double range; use povzner_gap for the log-space safe difference.
    """
    x, y, p, gamma = _check_povzner_domain(x, y, p, gamma)
    with np.errstate(over="raise"):
        try:
            lhs = (
                -(x ** p) - y ** p
                + 0.5 * p * x ** (p - 2.0) * y ** 2
                + 0.5 * p * y ** (p - 2.0) * x ** 2
            ) * np.abs(x - y) ** gamma
            rhs = (
                -0.5 * x ** (p + gamma)
                - 0.5 * y ** (p + gamma)
                + x ** p * y ** gamma
                + y ** p * x ** gamma
                + p ** (1.0 + 0.5 * gamma)
                * (x ** (p - 2.0 + gamma) * y ** 2 + y ** (p - 2.0 + gamma) * x ** 2)
            )
        except FloatingPointError as exc:
            raise OverflowError(
                "povzner sides overflow double precision; shrink x, y or p"
            ) from exc
    if not (np.all(np.isfinite(lhs)) and np.all(np.isfinite(rhs))):
        raise OverflowError("povzner sides overflow double precision; shrink x, y or p")
    return lhs, rhs


def _signed_logsum(log_mag: np.ndarray, signs: np.ndarray):
    """Sum of signs*exp(log_mag) along axis 0, returned as (sign, log|sum|)."""
    m = np.max(log_mag, axis=0)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    total = np.sum(signs * np.exp(log_mag - m_safe), axis=0)
    with np.errstate(divide="ignore"):
        log_abs = np.where(total != 0.0, np.log(np.abs(total)) + m_safe, -np.inf)
    log_abs = np.where(np.isfinite(m), log_abs, -np.inf)
    return np.sign(total), log_abs


def _povzner_gap_log(x, y, p, gamma):
    # gap = rhs - lhs as a signed sum of ten monomials, accumulated in log space.
    with np.errstate(divide="ignore"):
        lx = np.log(x)
        ly = np.log(y)
        ld = np.log(np.abs(x - y))
    lp = np.log(p)
    # (log magnitude, sign); rhs terms positive orientation, lhs terms negated.
    terms = [
        ((p + gamma) * lx + np.log(0.5), -1.0),
        ((p + gamma) * ly + np.log(0.5), -1.0),
        (p * lx + gamma * ly, +1.0),
        (p * ly + gamma * lx, +1.0),
        ((1.0 + 0.5 * gamma) * lp + (p - 2.0 + gamma) * lx + 2.0 * ly, +1.0),
        ((1.0 + 0.5 * gamma) * lp + (p - 2.0 + gamma) * ly + 2.0 * lx, +1.0),
        # minus lhs
        (p * lx + gamma * ld, +1.0),
        (p * ly + gamma * ld, +1.0),
        (np.log(0.5) + lp + (p - 2.0) * lx + 2.0 * ly + gamma * ld, -1.0),
        (np.log(0.5) + lp + (p - 2.0) * ly + 2.0 * lx + gamma * ld, -1.0),
    ]
    log_mag = np.stack([np.broadcast_arrays(t, x * 0.0)[0] for t, _ in terms])
    signs = np.array([s for _, s in terms], dtype=np.float64).reshape(
        (-1,) + (1,) * (log_mag.ndim - 1)
    )
    sign, log_abs = _signed_logsum(log_mag, signs)
    if np.any(log_abs > _LOG_FLOAT_MAX):
        raise OverflowError("povzner gap overflows double precision; shrink x, y or p")
    return sign * np.exp(log_abs)


def povzner_gap(x, y, p, gamma: float):
    """Gap rhs - lhs of the sharpened Povzner inequality (>= 0 analytically).

    Direct arithmetic for moderate speeds, signed log-space accumulation once
    max(x, y) exceeds 1e3 so extreme (x, p) either evaluate safely or raise
    OverflowError instead of comparing infinities.
    """
    x, y, p, gamma = _check_povzner_domain(x, y, p, gamma)
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0 and np.ndim(p) == 0
    x, y, p, gamma = np.broadcast_arrays(
        np.atleast_1d(x), np.atleast_1d(y), np.atleast_1d(p), np.atleast_1d(gamma)
    )
    big = np.maximum(x, y) > _POVZNER_LOG_SWITCH
    gap = np.empty(x.shape, dtype=np.float64)
    if np.any(~big):
        lhs, rhs = povzner_sides(x[~big], y[~big], p[~big], gamma[~big])
        gap[~big] = rhs - lhs
    if np.any(big):
        gap[big] = _povzner_gap_log(x[big], y[big], p[big], gamma[big])
    return float(gap[0]) if scalar and gap.size == 1 else gap


def kernel_modulus_ratio(x, y, gamma: float):
    """Lipschitz-modulus ratios of the drift and noise kernels.

    ratio_b     = |B(x) - B(y)|   / (|x - y| (|x|^gamma   + |y|^gamma))
    ratio_sigma = ||sigma(x) - sigma(y)||_F / (|x - y| (|x|^(gamma/2) + |y|^(gamma/2)))

    defined as 0 when x == y (including the origin).  Batched over leading
    axes; scalars in, scalars out.
    """
    gamma = _check_gamma(gamma)
    x = _as_z(x)
    y = _as_z(y)
    x, y = np.broadcast_arrays(x, y)
    rx = np.sqrt(np.sum(x * x, axis=-1))
    ry = np.sqrt(np.sum(y * y, axis=-1))
    d = np.sqrt(np.sum((x - y) ** 2, axis=-1))

    num_b = np.sqrt(np.sum((pair_b(x, gamma) - pair_b(y, gamma)) ** 2, axis=-1))
    num_s = np.sqrt(
        np.sum((pair_sigma(x, gamma) - pair_sigma(y, gamma)) ** 2, axis=(-2, -1))
    )
    den_b = d * (rx ** gamma + ry ** gamma)
    den_s = d * (rx ** (0.5 * gamma) + ry ** (0.5 * gamma))

    with np.errstate(invalid="ignore", divide="ignore"):
        ratio_b = np.where(den_b > 0.0, num_b / np.where(den_b > 0.0, den_b, 1.0), 0.0)
        ratio_s = np.where(den_s > 0.0, num_s / np.where(den_s > 0.0, den_s, 1.0), 0.0)
    if ratio_b.ndim == 0:
        return float(ratio_b), float(ratio_s)
    return ratio_b, ratio_s
