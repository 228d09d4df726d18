"""Particle ensembles: state container, initial sampling, conserved quantities.

An Ensemble is N velocities in R^3 together with the physical exponent gamma,
the current time, and a seed lineage that makes every downstream random draw
reproducible.  Initial laws are compactly supported (velocity balls), matching
the standing assumption of the moment and coupling estimates.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.random import SeedSequence, default_rng

__all__ = [
    "SeedLineage",
    "InitialSpec",
    "Ensemble",
    "sample_initial",
    "conserved_quantities",
    "save_snapshot",
    "load_snapshot",
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
]

SNAPSHOT_MAGIC = b"KACL"
SNAPSHOT_VERSION = 1

_KINDS = ("uniform_ball", "two_ball_mixture", "point_cloud_file")


@dataclass(frozen=True)
class SeedLineage:
    """Deterministic provenance of a replica's randomness."""

    seed: int
    replica: int
    step: int = 0

    def advanced(self, steps: int = 1) -> "SeedLineage":
        return SeedLineage(self.seed, self.replica, self.step + steps)


@dataclass(frozen=True)
class InitialSpec:
    """Initial law description.

    kind 'uniform_ball': uniform on the ball of radius r0 centred at 0.
    kind 'two_ball_mixture': with probability mixture_weight the base ball,
        otherwise the same ball translated by offset.  mixture_weight = 1
        reduces bit-exactly to uniform_ball.
    kind 'point_cloud_file': velocities read from a text file (one per line,
        three floats); n must equal the row count.
    """

    kind: str = "uniform_ball"
    r0: float = 1.0
    offset: tuple = (0.0, 0.0, 0.0)
    mixture_weight: float = 1.0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown initial kind {self.kind!r}; allowed: {_KINDS}")
        if self.r0 <= 0.0:
            raise ValueError(f"r0 must be positive, got {self.r0}")
        if not (0.0 <= self.mixture_weight <= 1.0):
            raise ValueError(f"mixture_weight must lie in [0, 1], got {self.mixture_weight}")
        if len(tuple(self.offset)) != 3:
            raise ValueError("offset must be a 3-vector")
        if self.kind == "point_cloud_file" and not self.path:
            raise ValueError("point_cloud_file spec requires a path")

    @property
    def support_radius(self) -> float:
        """Radius of a centred ball containing the support."""
        if self.kind == "point_cloud_file":
            raise ValueError("support radius of a point cloud is data dependent")
        off = float(np.linalg.norm(self.offset)) if self.mixture_weight < 1.0 else 0.0
        return self.r0 + off


@dataclass
class Ensemble:
    """N-particle velocity state."""

    velocities: np.ndarray  # (N, 3) float64
    gamma: float
    time: float = 0.0
    replica_id: int = 0
    lineage: SeedLineage | None = None

    def __post_init__(self):
        v = np.asarray(self.velocities, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"velocities must have shape (N, 3), got {v.shape}")
        if v.shape[0] < 1:
            raise ValueError("ensemble needs at least one particle")
        if not np.all(np.isfinite(v)):
            raise ValueError("velocities contain non-finite entries")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.time < 0.0:
            raise ValueError(f"time must be non-negative, got {self.time}")
        self.velocities = v

    @property
    def n(self) -> int:
        return self.velocities.shape[0]

    def with_velocities(self, v: np.ndarray, *, time: float | None = None,
                        lineage: SeedLineage | None = None) -> "Ensemble":
        return Ensemble(
            velocities=v,
            gamma=self.gamma,
            time=self.time if time is None else time,
            replica_id=self.replica_id,
            lineage=self.lineage if lineage is None else lineage,
        )


def _unit_directions(rng, n: int) -> np.ndarray:
    d = rng.standard_normal((n, 3))
    norms = np.linalg.norm(d, axis=1)
    # A zero row has probability 0; regenerating would shift the stream, so guard.
    norms[norms == 0.0] = 1.0
    return d / norms[:, None]


def sample_initial(spec: InitialSpec, n: int, seed, gamma: float = 0.0,
                   replica_id: int = 0) -> Ensemble:
    """Draw an initial ensemble; identical (spec, n, seed) gives identical bits.

    Ball radii use the inverse-CDF u^(1/3) scaling; directions are normalized
    Gaussian triples.  The mixture draws its component mask after the ball
    points so that mixture_weight = 1 reproduces uniform_ball bit-exactly.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if spec.kind == "point_cloud_file":
        v = np.loadtxt(spec.path, dtype=np.float64, ndmin=2)
        if v.shape != (n, 3):
            raise ValueError(
                f"point cloud {spec.path!r} has shape {v.shape}, expected ({n}, 3)"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError(f"point cloud {spec.path!r} contains non-finite entries")
        return Ensemble(v, gamma=gamma, replica_id=replica_id,
                        lineage=_lineage_of(seed, replica_id))

    rng = default_rng(seed)
    radii = spec.r0 * rng.random(n) ** (1.0 / 3.0)
    v = radii[:, None] * _unit_directions(rng, n)
    if spec.kind == "two_ball_mixture":
        shifted = rng.random(n) >= spec.mixture_weight
        v[shifted] += np.asarray(spec.offset, dtype=np.float64)
    return Ensemble(v, gamma=gamma, replica_id=replica_id,
                    lineage=_lineage_of(seed, replica_id))


def _lineage_of(seed, replica_id: int) -> SeedLineage | None:
    if isinstance(seed, (int, np.integer)):
        return SeedLineage(int(seed), replica_id, 0)
    if isinstance(seed, SeedSequence):
        ent = seed.entropy
        if isinstance(ent, (int, np.integer)):
            return SeedLineage(int(ent), replica_id, 0)
    return None


def conserved_quantities(e: Ensemble):
    """Total momentum (3,) and total kinetic energy sum |v_i|^2."""
    v = e.velocities
    return v.sum(axis=0), float(np.sum(v * v))


def save_snapshot(path, e: Ensemble) -> None:
    """Write the binary snapshot: magic, version u32, N u64, gamma f64, t f64,
    then N*3 float64 velocities, all little-endian."""
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<IQdd", SNAPSHOT_VERSION, e.n, e.gamma, e.time))
        fh.write(e.velocities.astype("<f8").tobytes())


def load_snapshot(path) -> Ensemble:
    """Read a snapshot written by save_snapshot; validates header and length."""
    path = Path(path)
    raw = path.read_bytes()
    head = 4 + struct.calcsize("<IQdd")
    if len(raw) < head:
        raise ValueError(f"snapshot {path} is truncated (header incomplete)")
    if raw[:4] != SNAPSHOT_MAGIC:
        raise ValueError(f"snapshot {path} has bad magic {raw[:4]!r}")
    version, n, gamma, t = struct.unpack("<IQdd", raw[4:head])
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"snapshot {path} has unsupported version {version}")
    expected = head + 24 * n
    if len(raw) != expected:
        raise ValueError(
            f"snapshot {path} is truncated: {len(raw)} bytes, expected {expected}"
        )
    v = np.frombuffer(raw[head:], dtype="<f8").reshape(int(n), 3).astype(np.float64)
    return Ensemble(v, gamma=gamma, time=t)
