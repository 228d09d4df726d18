"""Euler-Maruyama integrator for the conservative Kac pair-interaction SDE.

One step advances every particle by

    v_i += (2/N) sum_{j != i} B(v_i - v_j) dt
         + sqrt(2/N) sum_{j != i} sigma(v_i - v_j) dZ[i, j]

with antisymmetric pair increments dZ[j, i] = -dZ[i, j] ~ N(0, dt I).  The
antisymmetry makes total momentum exact at machine level every step; total
kinetic energy is conserved in law, with an O(dt) discrete drift that the
optional projection removes by rescaling fluctuations about the mean.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, asdict

import numpy as np

from ._version import __version__ as _pkg_version
from ._pairwise import pair_step_terms
from .ensemble import (
    Ensemble,
    InitialSpec,
    SeedLineage,
    conserved_quantities,
    sample_initial,
)
from .noise import PairNoise, row_offsets

__all__ = [
    "StepOptions",
    "StepRejected",
    "TrajectoryLog",
    "SimulationResult",
    "step",
    "project_conservation",
    "simulate",
    "simulate_replica",
    "resolve_workers",
    "WORKERS_ENV_VAR",
]

WORKERS_ENV_VAR = "KACLANDAU_WORKERS"
_SCHEMES = ("euler_maruyama",)
_MAX_HALVINGS = 8


@dataclass(frozen=True)
class StepOptions:
    """Numerical step controls."""

    dt: float
    energy_projection: bool = False
    dt_adaptive_cap: float = 0.5   # max drift displacement |(2/N) sum B| * dt
    scheme: str = "euler_maruyama"

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.dt_adaptive_cap <= 0.0:
            raise ValueError(f"dt_adaptive_cap must be positive, got {self.dt_adaptive_cap}")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; supported: {_SCHEMES}")


class StepRejected(RuntimeError):
    """Raised when the drift displacement exceeds dt_adaptive_cap; halve dt."""

    def __init__(self, max_displacement: float, cap: float):
        super().__init__(
            f"drift displacement {max_displacement:.3e} exceeds cap {cap:.3e}; reduce dt"
        )
        self.max_displacement = max_displacement
        self.cap = cap


def project_conservation(velocities: np.ndarray, target_momentum: np.ndarray,
                         target_energy: float) -> np.ndarray:
    """Rescale fluctuations about the momentum-preserving mean so that total
    momentum and total energy hit their targets exactly."""
    v = np.asarray(velocities, dtype=np.float64)
    n = v.shape[0]
    vbar = np.asarray(target_momentum, dtype=np.float64) / n
    fluct = v - v.mean(axis=0)
    fluct_energy = float(np.sum(fluct * fluct))
    if fluct_energy <= 0.0:
        raise ValueError("degenerate ensemble: zero fluctuation energy, cannot project")
    rest = target_energy - n * float(vbar @ vbar)
    if rest < 0.0:
        raise ValueError(
            "target energy below the bulk-motion energy; projection impossible"
        )
    lam = np.sqrt(rest / fluct_energy)
    return vbar + lam * fluct


def step(e: Ensemble, opts: StepOptions, noise: PairNoise | None,
         _sub: int = 0) -> Ensemble:
    """Advance one Euler-Maruyama step; noise=None runs the drift only.

    Uses e.lineage.step as the noise counter and advances the lineage.  Raises
    StepRejected when the per-particle drift displacement exceeds the cap, and
    RuntimeError (with lineage) on non-finite output.
    """
    if e.lineage is None:
        raise ValueError("ensemble has no seed lineage; cannot key the noise stream")
    vel = e.velocities
    n = e.n
    row_off = noise.row_offset_table if noise is not None else row_offsets(n)
    if noise is not None:
        block = noise.block(e.lineage.step, opts.dt, sub=_sub)
    else:
        block = np.zeros((n * (n - 1) // 2, 3))
    drift_sum, noise_sum = pair_step_terms(vel, block, row_off, e.gamma)

    drift_disp = (2.0 / n) * opts.dt * drift_sum
    max_disp = float(np.max(np.sqrt(np.sum(drift_disp * drift_disp, axis=1))))
    if max_disp > opts.dt_adaptive_cap:
        raise StepRejected(max_disp, opts.dt_adaptive_cap)

    new_vel = vel + drift_disp + np.sqrt(2.0 / n) * noise_sum
    if not np.all(np.isfinite(new_vel)):
        raise RuntimeError(
            f"non-finite velocity after step {e.lineage.step} "
            f"(seed={e.lineage.seed}, replica={e.lineage.replica})"
        )
    if opts.energy_projection:
        p_pre, e_pre = conserved_quantities(e)
        new_vel = project_conservation(new_vel, p_pre, e_pre)
    return e.with_velocities(
        new_vel, time=e.time + opts.dt, lineage=e.lineage.advanced()
    )


def _advance_interval(e: Ensemble, opts: StepOptions, noise: PairNoise | None,
                      sub_base: int, depth: int) -> Ensemble:
    # One macro step of size opts.dt, recursively halved on rejection.  Each
    # attempt draws from its own counter sub-stream so retries stay keyed to
    # the absolute step index.
    try:
        return step(e, opts, noise, _sub=sub_base)
    except StepRejected:
        if depth >= _MAX_HALVINGS:
            raise RuntimeError(
                f"step {e.lineage.step} still rejected after {_MAX_HALVINGS} halvings"
            )
    half = StepOptions(
        dt=0.5 * opts.dt,
        energy_projection=opts.energy_projection,
        dt_adaptive_cap=opts.dt_adaptive_cap,
        scheme=opts.scheme,
    )
    # Children occupy sub-streams 2*sub_base+1 and 2*sub_base+2 (heap layout).
    lineage = e.lineage
    mid = _advance_interval(e, half, noise, 2 * sub_base + 1, depth + 1)
    mid = mid.with_velocities(mid.velocities, lineage=lineage)  # keep step index
    out = _advance_interval(mid, half, noise, 2 * sub_base + 2, depth + 1)
    return out.with_velocities(out.velocities, time=e.time + opts.dt,
                               lineage=lineage.advanced())


@dataclass
class TrajectoryLog:
    """Per-replica record of one simulation."""

    times: np.ndarray               # (K+1,) strictly increasing, starts at t0
    conserved: np.ndarray           # (K+1, 4) columns px, py, pz, energy
    snapshot_times: np.ndarray      # subset of times at the snapshot stride
    snapshots: list                 # list of (N, 3) velocity copies
    manifest: dict = field(default_factory=dict)

    def snapshot_at(self, t: float, tol: float = 1e-9) -> np.ndarray:
        k = int(np.argmin(np.abs(self.snapshot_times - t)))
        if abs(self.snapshot_times[k] - t) > tol:
            raise KeyError(
                f"no snapshot at t={t}; nearest logged time is {self.snapshot_times[k]}"
            )
        return self.snapshots[k]


@dataclass
class SimulationResult:
    """All replica trajectories of one configuration."""

    config: "object"                # SimConfig (kept duck-typed to avoid cycles)
    logs: list                      # list[TrajectoryLog], replica order

    @property
    def snapshot_times(self) -> np.ndarray:
        return self.logs[0].snapshot_times

    def velocities_at(self, t: float) -> np.ndarray:
        """Stack replica snapshots at logged time t: (R, N, 3)."""
        return np.stack([log.snapshot_at(t) for log in self.logs])

    def pooled_velocities_at(self, t: float) -> np.ndarray:
        """All replicas' particles pooled: (R*N, 3)."""
        return self.velocities_at(t).reshape(-1, 3)


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, else the environment variable, else 1."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV_VAR, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(
                f"{WORKERS_ENV_VAR} must be an integer, got {env!r}"
            ) from exc
    return 1


def simulate_replica(config, replica: int, initial_spec: InitialSpec | None = None,
                     start: Ensemble | None = None,
                     extra_steps: int | None = None) -> TrajectoryLog:
    """Run one replica to the horizon; deterministic in (config, replica).

    `start` plus `extra_steps` continues a trajectory whose lineage already
    carries the absolute step index (used by resume).
    """
    from numpy.random import SeedSequence

    spec = initial_spec if initial_spec is not None else config.initial_spec()
    opts = StepOptions(
        dt=config.dt,
        energy_projection=config.energy_projection,
        dt_adaptive_cap=config.dt_adaptive_cap,
    )
    if start is None:
        e = sample_initial(
            spec, config.n_particles, SeedSequence((config.seed, replica, 0)),
            gamma=config.gamma, replica_id=replica,
        )
        e = e.with_velocities(e.velocities,
                              lineage=SeedLineage(config.seed, replica, 0))
        steps = config.n_steps()
    else:
        e = start
        steps = int(extra_steps)
    noise = PairNoise(config.seed, replica, config.n_particles)

    stride = max(1, int(config.snapshot_stride))
    times = [e.time]
    p0, e0 = conserved_quantities(e)
    conserved = [np.array([p0[0], p0[1], p0[2], e0])]
    snapshot_times = [e.time]
    snaps = [e.velocities.copy()]
    for k in range(steps):
        e = _advance_interval(e, opts, noise, 0, 0)
        p, en = conserved_quantities(e)
        times.append(e.time)
        conserved.append(np.array([p[0], p[1], p[2], en]))
        if (k + 1) % stride == 0 or (k + 1) == steps:
            snapshot_times.append(e.time)
            snaps.append(e.velocities.copy())
    manifest = {
        "package_version": _pkg_version,
        "replica": replica,
        "seed": config.seed,
        "config": config.to_flat_dict(),
        "final_step": e.lineage.step,
    }
    return TrajectoryLog(
        times=np.array(times),
        conserved=np.array(conserved),
        snapshot_times=np.array(snapshot_times),
        snapshots=snaps,
        manifest=manifest,
    )


def _replica_task(args):
    config, replica, spec = args
    return simulate_replica(config, replica, initial_spec=spec)


def simulate(config, initial_spec: InitialSpec | None = None,
             workers: int | None = None) -> SimulationResult:
    """Run all replicas of a configuration.

    Replica tasks are independent and deterministically seeded, and results
    are reduced in replica order, so output is bit-identical for any worker
    count.
    """
    nworkers = resolve_workers(workers)
    tasks = [(config, r, initial_spec) for r in range(config.replicas)]
    if nworkers == 1 or config.replicas == 1:
        logs = [_replica_task(t) for t in tasks]
    else:
        import multiprocessing
        from concurrent.futures import ProcessPoolExecutor

        # spawn, not fork: the numba-parallel kernels hold OpenMP state that
        # does not survive fork()
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=min(nworkers, config.replicas),
                                 mp_context=ctx) as ex:
            logs = list(ex.map(_replica_task, tasks))
    return SimulationResult(config=config, logs=logs)
