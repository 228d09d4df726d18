"""Integrator: pinned drift step, conservation, projection, determinism."""

import numpy as np
import pytest

from kaclandau.ensemble import Ensemble, InitialSpec, SeedLineage, conserved_quantities
from kaclandau.harness import SimConfig
from kaclandau.integrator import (
    StepOptions,
    StepRejected,
    project_conservation,
    resolve_workers,
    simulate,
    simulate_replica,
    step,
    WORKERS_ENV_VAR,
)
from kaclandau._pairwise import pair_step_terms, reference_step_terms
from kaclandau.noise import PairNoise, row_offsets


def two_particle(gamma=1.0):
    v = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    return Ensemble(v, gamma=gamma, lineage=SeedLineage(0, 0, 0))


class TestSingleStep:
    def test_pinned_two_particle_drift(self):
        # B(V1-V2) = -2 (2,0,0) |2|^1 = (-8,0,0); prefactor 2/N = 1, dt = 0.01.
        e = step(two_particle(), StepOptions(dt=0.01), noise=None)
        np.testing.assert_allclose(e.velocities[0], [0.92, 0.0, 0.0], rtol=1e-14)
        np.testing.assert_allclose(e.velocities[1], [-0.92, 0.0, 0.0], rtol=1e-14)
        assert e.time == pytest.approx(0.01)
        assert e.lineage.step == 1

    def test_aligned_pair_noise_vanishes(self):
        # The projector annihilates the relative direction, and for N=2 the
        # only increment acts along it, so noise changes nothing off-axis...
        # in fact sigma(z) dZ is orthogonal to z, so the x-axis stays clean.
        e0 = two_particle()
        noise = PairNoise(0, 0, 2)
        e1 = step(e0, StepOptions(dt=0.01), noise)
        drift_only = step(e0, StepOptions(dt=0.01), noise=None)
        # x components agree exactly with the drift-only step
        np.testing.assert_allclose(e1.velocities[:, 0], drift_only.velocities[:, 0],
                                   rtol=1e-14)

    def test_momentum_exact_one_step(self):
        spec = InitialSpec(r0=1.0)
        from kaclandau.ensemble import sample_initial
        e = sample_initial(spec, 64, seed=5, gamma=0.5)
        e = e.with_velocities(e.velocities, lineage=SeedLineage(5, 0, 0))
        p0, _ = conserved_quantities(e)
        e1 = step(e, StepOptions(dt=0.01), PairNoise(5, 0, 64))
        p1, _ = conserved_quantities(e1)
        np.testing.assert_allclose(p1, p0, atol=1e-13)

    def test_rejection_signal(self):
        v = np.array([[50.0, 0.0, 0.0], [-50.0, 0.0, 0.0]])
        e = Ensemble(v, gamma=1.0, lineage=SeedLineage(0, 0, 0))
        with pytest.raises(StepRejected):
            step(e, StepOptions(dt=0.01, dt_adaptive_cap=0.5), noise=None)

    def test_missing_lineage(self):
        e = Ensemble(np.array([[1.0, 0, 0], [-1.0, 0, 0]]), gamma=1.0)
        with pytest.raises(ValueError, match="lineage"):
            step(e, StepOptions(dt=0.01), noise=None)

    def test_step_options_validation(self):
        with pytest.raises(ValueError):
            StepOptions(dt=0.0)
        with pytest.raises(ValueError):
            StepOptions(dt=0.01, dt_adaptive_cap=-1.0)
        with pytest.raises(ValueError):
            StepOptions(dt=0.01, scheme="milstein")


class TestPairwiseBackend:
    def test_matches_reference_implementation(self):
        # numba-parallel path vs plain numpy double loop
        rng = np.random.default_rng(17)
        for n in (2, 5, 16):
            vel = rng.uniform(-2.0, 2.0, size=(n, 3))
            block = rng.standard_normal((n * (n - 1) // 2, 3)) * 0.1
            w_full = np.zeros((n, n, 3))
            rank = 0
            for i in range(n):
                for j in range(i + 1, n):
                    w_full[i, j] = block[rank]
                    w_full[j, i] = -block[rank]
                    rank += 1
            for gamma in (0.0, 0.5, 1.0):
                drift, noise = pair_step_terms(vel, block, row_offsets(n), gamma)
                drift_ref, noise_ref = reference_step_terms(vel, w_full, gamma)
                np.testing.assert_allclose(drift, drift_ref, rtol=1e-12, atol=1e-12)
                np.testing.assert_allclose(noise, noise_ref, rtol=1e-12, atol=1e-12)


class TestProjection:
    def test_pinned_example(self):
        # {(2,0,0),(-2,0,0)} with targets p=0, E=2: fluctuation energy 8,
        # lambda = sqrt(2/8) = 1/2.
        v = np.array([[2.0, 0.0, 0.0], [-2.0, 0.0, 0.0]])
        out = project_conservation(v, np.zeros(3), 2.0)
        np.testing.assert_allclose(out, [[1.0, 0, 0], [-1.0, 0, 0]], rtol=1e-15)

    def test_identity_when_already_satisfied(self):
        rng = np.random.default_rng(3)
        v = rng.standard_normal((10, 3))
        p, en = v.sum(axis=0), float(np.sum(v * v))
        out = project_conservation(v, p, en)
        np.testing.assert_allclose(out, v, rtol=1e-12)

    def test_degenerate_rejected(self):
        v = np.ones((4, 3))
        with pytest.raises(ValueError, match="degenerate"):
            project_conservation(v, v.sum(axis=0), 12.0)

    def test_unreachable_energy_rejected(self):
        v = np.array([[2.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        # bulk motion alone carries (3/2)^2*2 = 4.5 > target
        with pytest.raises(ValueError, match="projection impossible"):
            project_conservation(v, v.sum(axis=0), 1.0)

    def test_exactness_along_trajectory(self):
        cfg = SimConfig(gamma=0.5, n_particles=32, dt=0.01, horizon=0.5,
                        replicas=1, seed=8, energy_projection=True)
        log = simulate_replica(cfg, 0)
        e_series = log.conserved[:, 3]
        np.testing.assert_allclose(e_series, e_series[0], rtol=1e-12)
        p_series = log.conserved[:, :3]
        assert np.max(np.abs(p_series - p_series[0])) <= 1e-12


class TestTrajectories:
    def test_momentum_machine_exact_1000_steps(self):
        cfg = SimConfig(gamma=0.5, n_particles=48, dt=0.01, horizon=10.0,
                        replicas=1, seed=19, snapshot_stride=1000)
        log = simulate_replica(cfg, 0)
        p = log.conserved[:, :3]
        scale = max(1.0, float(np.sqrt(48 * log.conserved[0, 3])))
        assert np.max(np.abs(p - p[0])) / scale <= 1e-12

    def test_snapshot_stride_and_lookup(self):
        cfg = SimConfig(gamma=0.0, n_particles=16, dt=0.05, horizon=1.0,
                        replicas=1, seed=2, snapshot_stride=5)
        log = simulate_replica(cfg, 0)
        np.testing.assert_allclose(log.snapshot_times, [0.0, 0.25, 0.5, 0.75, 1.0])
        got = log.snapshot_at(0.5)
        assert got.shape == (16, 3)
        with pytest.raises(KeyError):
            log.snapshot_at(0.33)

    def test_replicas_differ(self):
        cfg = SimConfig(gamma=0.5, n_particles=16, dt=0.01, horizon=0.1,
                        replicas=2, seed=4)
        result = simulate(cfg)
        a, b = result.logs[0].snapshots[-1], result.logs[1].snapshots[-1]
        assert not np.array_equal(a, b)

    def test_worker_count_invariance(self, monkeypatch):
        cfg = SimConfig(gamma=0.5, n_particles=24, dt=0.01, horizon=0.2,
                        replicas=4, seed=6)
        serial = simulate(cfg, workers=1)
        parallel = simulate(cfg, workers=4)
        for ls, lp in zip(serial.logs, parallel.logs):
            np.testing.assert_array_equal(ls.snapshots[-1], lp.snapshots[-1])
            np.testing.assert_array_equal(ls.conserved, lp.conserved)
        monkeypatch.setenv(WORKERS_ENV_VAR, "3")
        via_env = simulate(cfg)
        np.testing.assert_array_equal(via_env.logs[2].snapshots[-1],
                                      serial.logs[2].snapshots[-1])

    def test_resolve_workers(self, monkeypatch):
        monkeypatch.delenv(WORKERS_ENV_VAR, raising=False)
        assert resolve_workers() == 1
        assert resolve_workers(5) == 5
        monkeypatch.setenv(WORKERS_ENV_VAR, "7")
        assert resolve_workers() == 7
        monkeypatch.setenv(WORKERS_ENV_VAR, "soup")
        with pytest.raises(ValueError):
            resolve_workers()

    def test_velocities_at_stacks_replicas(self):
        cfg = SimConfig(gamma=0.5, n_particles=12, dt=0.01, horizon=0.05,
                        replicas=3, seed=1)
        result = simulate(cfg)
        stack = result.velocities_at(0.05)
        assert stack.shape == (3, 12, 3)
        pooled = result.pooled_velocities_at(0.05)
        assert pooled.shape == (36, 3)


class TestAdaptiveHalving:
    def test_halving_recovers_macro_grid(self):
        # A cloud wide enough to trip the cap at dt=0.05 but not at dt=0.025.
        rng = np.random.default_rng(44)
        v = rng.uniform(-1.0, 1.0, size=(8, 3)) * 6.0
        e = Ensemble(v, gamma=1.0, lineage=SeedLineage(3, 0, 0))
        opts = StepOptions(dt=0.05, dt_adaptive_cap=1.0)
        with pytest.raises(StepRejected):
            step(e, opts, PairNoise(3, 0, 8))
        from kaclandau.integrator import _advance_interval
        out = _advance_interval(e, opts, PairNoise(3, 0, 8), 0, 0)
        assert out.time == pytest.approx(0.05)
        assert out.lineage.step == 1
        # determinism across reruns
        out2 = _advance_interval(e, opts, PairNoise(3, 0, 8), 0, 0)
        np.testing.assert_array_equal(out.velocities, out2.velocities)

    def test_halving_conserves_momentum(self):
        rng = np.random.default_rng(45)
        v = rng.uniform(-1.0, 1.0, size=(8, 3)) * 6.0
        v -= v.mean(axis=0)
        e = Ensemble(v, gamma=1.0, lineage=SeedLineage(3, 0, 0))
        from kaclandau.integrator import _advance_interval
        out = _advance_interval(e, StepOptions(dt=0.05, dt_adaptive_cap=1.0),
                                PairNoise(3, 0, 8), 0, 0)
        p0, _ = conserved_quantities(e)
        p1, _ = conserved_quantities(out)
        np.testing.assert_allclose(p1, p0, atol=1e-12)
