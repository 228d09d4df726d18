"""Synchronous coupling of two Kac systems driven by identical pair noise.

Two ensembles are sampled from their respective initial laws with common
random numbers, matched by an empirical optimal coupling at t=0, and evolved
in lockstep with the same pairwise Brownian increments.  The tracked statistic

    u_m(t) = mean over replicas of sum_{i<=m} |V^i(t) - Vtilde^i(t)|^2

measures how fast the coupled families drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import SeedSequence
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .ensemble import Ensemble, InitialSpec, SeedLineage, sample_initial
from .integrator import StepOptions, StepRejected, resolve_workers, step
from .noise import PairNoise

__all__ = [
    "PAIRING_EXACT_MAX",
    "PAIRING_LEX_MAX",
    "CoupledPair",
    "CouplingReport",
    "optimal_pairing",
    "coupled_simulate",
    "u_statistic",
]

PAIRING_EXACT_MAX = 4096   # beyond this, fall back to sorted projection
PAIRING_LEX_MAX = 64       # lexicographic tie-break refinement cap
_COST_TIE_ATOL = 1e-12
_MAX_HALVINGS = 8


def _lex_refine(cost: np.ndarray, best_cost: float) -> np.ndarray:
    # Lexicographically smallest permutation among cost-optimal ones: fix rows
    # in order, trying candidate columns ascending and re-solving the remnant.
    k = cost.shape[0]
    perm = np.full(k, -1, dtype=np.int64)
    free_cols = list(range(k))
    prefix = 0.0
    tol = _COST_TIE_ATOL * max(1.0, abs(best_cost))
    for i in range(k):
        rest_rows = np.arange(i + 1, k)
        for j in free_cols:
            rem_cols = np.array([c for c in free_cols if c != j], dtype=np.int64)
            cand = prefix + cost[i, j]
            if rest_rows.size:
                sub = cost[np.ix_(rest_rows, rem_cols)]
                rr, cc = linear_sum_assignment(sub)
                cand += sub[rr, cc].sum()
            if cand <= best_cost + tol:
                perm[i] = j
                prefix += cost[i, j]
                free_cols.remove(j)
                break
        if perm[i] < 0:     # numerical slack exhausted; keep the solver answer
            raise RuntimeError("tie-break refinement failed to extend the matching")
    return perm


def _projection_pairing(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Sort both clouds along the dominant displacement axis and match ranks.
    u = b.mean(axis=0) - a.mean(axis=0)
    norm = np.linalg.norm(u)
    if norm < 1e-12:
        pooled = np.vstack([a, b]) - np.vstack([a, b]).mean(axis=0)
        _, _, vt = np.linalg.svd(pooled, full_matrices=False)
        u = vt[0]
    else:
        u = u / norm
    order_a = np.argsort(a @ u, kind="stable")
    order_b = np.argsort(b @ u, kind="stable")
    perm = np.empty(a.shape[0], dtype=np.int64)
    perm[order_a] = order_b
    return perm


def optimal_pairing(samples_a, samples_b) -> np.ndarray:
    """Permutation pi minimizing sum_i |a_i - b_pi(i)|^2.

    Exact assignment up to PAIRING_EXACT_MAX points, with lexicographically
    smallest tie-breaking up to PAIRING_LEX_MAX; larger clouds are matched by
    sorted projection along the dominant displacement axis.
    """
    a = np.asarray(samples_a, dtype=np.float64)
    b = np.asarray(samples_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"expected (k, d) arrays of equal d, got {a.shape}, {b.shape}")
    if a.shape[0] != b.shape[0]:
        raise ValueError(
            f"pairing needs equal counts, got {a.shape[0]} and {b.shape[0]}"
        )
    k = a.shape[0]
    if k > PAIRING_EXACT_MAX:
        return _projection_pairing(a, b)
    cost = cdist(a, b, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(k, dtype=np.int64)
    perm[rows] = cols
    if k <= PAIRING_LEX_MAX:
        perm = _lex_refine(cost, float(cost[rows, cols].sum()))
    return perm


@dataclass(frozen=True)
class CoupledPair:
    """Two ensembles advancing in lockstep under shared pair noise.

    The pairing permutation fixed at t=0 maps a-indices to b-indices; b is
    stored already reordered so partners share the particle index.
    """

    a: Ensemble
    b: Ensemble
    pairing: np.ndarray
    shared_seed: SeedLineage

    def __post_init__(self):
        if self.a.time != self.b.time:
            raise ValueError(
                f"coupled families out of sync: t_a={self.a.time}, t_b={self.b.time}"
            )
        perm = np.asarray(self.pairing, dtype=np.int64)
        n = self.a.n
        if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
            raise ValueError("pairing is not a bijection on the particle indices")
        object.__setattr__(self, "pairing", perm)

    def pair_sq_distances(self) -> np.ndarray:
        d = self.a.velocities - self.b.velocities
        return np.sum(d * d, axis=1)


@dataclass
class CouplingReport:
    """u_m time series averaged over replicas."""

    times: np.ndarray            # (K+1,)
    m_list: tuple                # (M,)
    u_mean: np.ndarray           # (M, K+1)
    u_stderr: np.ndarray         # (M, K+1)
    u0: float                    # replica-mean per-pair squared distance at t=0
    replicas: int
    final_a: np.ndarray | None = None    # (R, N, 3) family-a states at horizon
    final_b: np.ndarray | None = None

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# kaclandau coupling report v1\n")
            fh.write("# columns: time,m,u_mean,u_stderr\n")
            for km, m in enumerate(self.m_list):
                for kt, t in enumerate(self.times):
                    fh.write(
                        f"{t:.17g},{m},{self.u_mean[km, kt]:.17g},"
                        f"{self.u_stderr[km, kt]:.17g}\n"
                    )


def u_statistic(report: CouplingReport, m: int, t: float) -> float:
    """Look up u_m(t) at a logged time; misses raise."""
    if m not in report.m_list:
        raise ValueError(f"m={m} not tracked; available: {report.m_list}")
    km = report.m_list.index(m)
    kt = int(np.argmin(np.abs(report.times - t)))
    if abs(report.times[kt] - t) > 1e-9:
        raise ValueError(f"t={t} not logged; nearest is {report.times[kt]}")
    return float(report.u_mean[km, kt])


def _paired_interval(ea: Ensemble, eb: Ensemble, opts: StepOptions,
                     noise: PairNoise, sub_base: int, depth: int):
    # Advance both families one macro step with shared noise.  A rejection by
    # either family halves dt for both, keeping them in lockstep.
    try:
        na = step(ea, opts, noise, _sub=sub_base)
        nb = step(eb, opts, noise, _sub=sub_base)
        return na, nb
    except StepRejected:
        if depth >= _MAX_HALVINGS:
            raise RuntimeError(
                f"coupled step {ea.lineage.step} still rejected after "
                f"{_MAX_HALVINGS} halvings"
            )
    half = StepOptions(dt=0.5 * opts.dt, energy_projection=opts.energy_projection,
                       dt_adaptive_cap=opts.dt_adaptive_cap, scheme=opts.scheme)
    lin_a, lin_b = ea.lineage, eb.lineage
    ma, mb = _paired_interval(ea, eb, half, noise, 2 * sub_base + 1, depth + 1)
    ma = ma.with_velocities(ma.velocities, lineage=lin_a)
    mb = mb.with_velocities(mb.velocities, lineage=lin_b)
    oa, ob = _paired_interval(ma, mb, half, noise, 2 * sub_base + 2, depth + 1)
    oa = oa.with_velocities(oa.velocities, time=ea.time + opts.dt,
                            lineage=lin_a.advanced())
    ob = ob.with_velocities(ob.velocities, time=eb.time + opts.dt,
                            lineage=lin_b.advanced())
    return oa, ob


def _coupled_replica(config, spec_a: InitialSpec, spec_b: InitialSpec,
                     m_list, replica: int):
    n = config.n_particles
    # Common random numbers: both laws sampled from the same stream, so equal
    # specs give identical clouds and shifted laws stay pointwise matched.
    ea = sample_initial(spec_a, n, SeedSequence((config.seed, replica, 0)),
                        gamma=config.gamma, replica_id=replica)
    eb = sample_initial(spec_b, n, SeedSequence((config.seed, replica, 0)),
                        gamma=config.gamma, replica_id=replica)
    perm = optimal_pairing(ea.velocities, eb.velocities)
    lineage = SeedLineage(config.seed, replica, 0)
    ea = ea.with_velocities(ea.velocities, lineage=lineage)
    eb = eb.with_velocities(eb.velocities[perm], lineage=lineage)

    opts = StepOptions(dt=config.dt, energy_projection=config.energy_projection,
                       dt_adaptive_cap=config.dt_adaptive_cap)
    noise = PairNoise(config.seed, replica, n)
    steps = config.n_steps()
    m_arr = np.asarray(m_list, dtype=np.int64)

    def u_row(pa: Ensemble, pb: Ensemble) -> np.ndarray:
        d = pa.velocities - pb.velocities
        csum = np.cumsum(np.sum(d * d, axis=1))
        return csum[m_arr - 1]

    times = [ea.time]
    rows = [u_row(ea, eb)]
    u0 = float(np.mean(np.sum((ea.velocities - eb.velocities) ** 2, axis=1)))
    for _ in range(steps):
        ea, eb = _paired_interval(ea, eb, opts, noise, 0, 0)
        times.append(ea.time)
        rows.append(u_row(ea, eb))
    return np.array(times), np.array(rows), u0, ea.velocities, eb.velocities


def _coupled_task(args):
    return _coupled_replica(*args)


def coupled_simulate(config, spec_a: InitialSpec, spec_b: InitialSpec,
                     m_list, workers: int | None = None) -> CouplingReport:
    """Evolve coupled families for every replica and average the u statistics.

    m_list entries must lie in {1..N}; u is logged at every step.
    """
    m_list = tuple(int(m) for m in m_list)
    if not m_list:
        raise ValueError("m_list must be non-empty")
    for m in m_list:
        if not 1 <= m <= config.n_particles:
            raise ValueError(f"m={m} outside 1..{config.n_particles}")
    tasks = [(config, spec_a, spec_b, m_list, r) for r in range(config.replicas)]
    nworkers = resolve_workers(workers)
    if nworkers == 1 or config.replicas == 1:
        results = [_coupled_task(t) for t in tasks]
    else:
        import multiprocessing
        from concurrent.futures import ProcessPoolExecutor

        # spawn, not fork: the numba-parallel kernels hold OpenMP state that
        # does not survive fork()
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=min(nworkers, config.replicas),
                                 mp_context=ctx) as ex:
            results = list(ex.map(_coupled_task, tasks))

    times = results[0][0]
    u_all = np.stack([rows for _, rows, _, _, _ in results])   # (R, K+1, M)
    u_all = np.moveaxis(u_all, 2, 0)                           # (M, R, K+1)
    r = u_all.shape[1]
    u_mean = u_all.mean(axis=1)
    if r > 1:
        u_stderr = u_all.std(axis=1, ddof=1) / np.sqrt(r)
    else:
        u_stderr = np.zeros_like(u_mean)
    u0 = float(np.mean([u0_r for _, _, u0_r, _, _ in results]))
    return CouplingReport(times=times, m_list=m_list, u_mean=u_mean,
                          u_stderr=u_stderr, u0=u0, replicas=r,
                          final_a=np.stack([fa for *_, fa, _ in results]),
                          final_b=np.stack([fb for *_, fb in results]))
