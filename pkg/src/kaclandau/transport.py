"""Wasserstein-2 distances between empirical velocity clouds.

Exact W2 solves the assignment problem on the squared-distance cost matrix;
the sliced variant averages squared one-dimensional W2 over random unit
directions and scales to clouds far beyond the assignment-solver cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import default_rng
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

__all__ = [
    "EmpiricalCloud",
    "W2_EXACT_MAX_POINTS",
    "w2_exact",
    "w2_sliced",
    "subsample_cloud",
    "w2_group_estimate",
]

W2_EXACT_MAX_POINTS = 4096


@dataclass(frozen=True)
class EmpiricalCloud:
    """Uniformly weighted point cloud in R^d (d = 3m for m-particle marginals)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError(f"points must be (k, d) with k >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("cloud contains non-finite points")
        object.__setattr__(self, "points", pts)

    @property
    def k(self) -> int:
        return self.points.shape[0]


def _points(cloud) -> np.ndarray:
    if isinstance(cloud, EmpiricalCloud):
        return cloud.points
    return EmpiricalCloud(np.asarray(cloud, dtype=np.float64)).points


def w2_exact(a, b) -> float:
    """Exact W2 between equal-size uniform clouds via optimal assignment.

    Returns sqrt(min_pi (1/k) sum_i |a_i - b_pi(i)|^2).  Refuses clouds larger
    than W2_EXACT_MAX_POINTS (use w2_sliced) and unequal counts (resampling to
    a common size is the caller's job).
    """
    pa, pb = _points(a), _points(b)
    if pa.shape[0] != pb.shape[0]:
        raise ValueError(
            f"w2_exact needs equal point counts, got {pa.shape[0]} and {pb.shape[0]}"
        )
    if pa.shape[1] != pb.shape[1]:
        raise ValueError(
            f"dimension mismatch: {pa.shape[1]} vs {pb.shape[1]}"
        )
    k = pa.shape[0]
    if k > W2_EXACT_MAX_POINTS:
        raise ValueError(
            f"{k} points exceeds the exact-assignment cap {W2_EXACT_MAX_POINTS}; "
            "use w2_sliced"
        )
    cost = cdist(pa, pb, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].mean()))


def _unit_directions(rng, count: int, dim: int) -> np.ndarray:
    u = rng.standard_normal((count, dim))
    norms = np.linalg.norm(u, axis=1)
    norms[norms == 0.0] = 1.0
    return u / norms[:, None]


def w2_sliced(a, b, n_projections: int = 512, seed: int = 0,
              return_stderr: bool = False):
    """Sliced W2: root-mean of squared 1-D W2 over random unit directions.

    Deterministic given the seed.  With return_stderr=True also returns the
    delta-method standard error of the estimate over projections.
    """
    pa, pb = _points(a), _points(b)
    if pa.shape[0] != pb.shape[0]:
        raise ValueError(
            f"w2_sliced needs equal point counts, got {pa.shape[0]} and {pb.shape[0]}"
        )
    if pa.shape[1] != pb.shape[1]:
        raise ValueError(f"dimension mismatch: {pa.shape[1]} vs {pb.shape[1]}")
    if n_projections < 1:
        raise ValueError(f"n_projections must be >= 1, got {n_projections}")
    rng = default_rng(seed)
    dirs = _unit_directions(rng, n_projections, pa.shape[1])
    proj_a = np.sort(pa @ dirs.T, axis=0)     # (k, n_projections)
    proj_b = np.sort(pb @ dirs.T, axis=0)
    sq = np.mean((proj_a - proj_b) ** 2, axis=0)   # squared 1-D W2 per direction
    mean_sq = float(sq.mean())
    value = float(np.sqrt(mean_sq))
    if not return_stderr:
        return value
    if n_projections == 1 or mean_sq == 0.0:
        return value, 0.0
    se_sq = float(sq.std(ddof=1) / np.sqrt(n_projections))
    return value, se_sq / (2.0 * value)


def subsample_cloud(points, cap: int = 2048, seed: int = 0) -> np.ndarray:
    """Uniform without-replacement subsample with a fixed seed; identity when
    the cloud already fits under the cap."""
    pts = _points(points)
    if pts.shape[0] <= cap:
        return pts
    idx = default_rng(seed).choice(pts.shape[0], size=cap, replace=False)
    idx.sort()
    return pts[idx]


def w2_group_estimate(samples_a: np.ndarray, samples_b: np.ndarray,
                      groups: int = 4, cap: int = 2048, seed: int = 0):
    """W2 between replica-structured samples with a replica-group stderr.

    samples_a, samples_b: (R, N, d) stacks.  Replicas are split into `groups`
    contiguous groups; each group's pooled clouds give one exact W2 value;
    returns (mean, stderr over groups).
    """
    va = np.asarray(samples_a, dtype=np.float64)
    vb = np.asarray(samples_b, dtype=np.float64)
    if va.ndim != 3 or vb.ndim != 3:
        raise ValueError("expected (R, N, d) replica stacks")
    g = min(groups, va.shape[0], vb.shape[0])
    if g < 1:
        raise ValueError("need at least one replica per input")
    vals = []
    for i in range(g):
        ga = va[i::g].reshape(-1, va.shape[2])
        gb = vb[i::g].reshape(-1, vb.shape[2])
        k = min(ga.shape[0], gb.shape[0], cap)
        ga = subsample_cloud(ga, cap=k, seed=seed + 2 * i)
        gb = subsample_cloud(gb, cap=k, seed=seed + 2 * i + 1)
        if ga.shape[0] != gb.shape[0]:       # unequal pools: trim to common size
            k = min(ga.shape[0], gb.shape[0])
            ga, gb = ga[:k], gb[:k]
        vals.append(w2_exact(ga, gb))
    vals = np.array(vals)
    stderr = float(vals.std(ddof=1) / np.sqrt(g)) if g > 1 else 0.0
    return float(vals.mean()), stderr
