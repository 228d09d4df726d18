"""Verification suites: one function per acceptance criterion.

Each criterion runs at its pinned scale and returns a CriterionResult with the
measured headline number, the threshold it is compared against, and a detail
string.  Simulation results are memoized per configuration so criteria that
share a run (for example the gamma=0 oracle pair) pay for it once.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import kendalltau

from .coupling import coupled_simulate
from .ensemble import InitialSpec
from .harness import SimConfig
from .inequalities import (
    MomentOdeParams,
    exp_series_threshold,
    f_sum_bound,
    f_tail_bound,
    g_sum_bound,
    hierarchy_weights,
    moment_ode_bound,
    moment_ode_solve,
    stability_rhs,
)
from .integrator import simulate
from .kernels import povzner_gap, povzner_sides
from .observables import (
    GaussianBump,
    bbgky_residual,
    chaos_covariance,
    exponential_moment,
    ExpMomentSpec,
    fit_moment_constant,
    moment_growth_exponent,
    polynomial_moment,
)
from .oracle import maxwellian_m4_trajectory
from .transport import w2_group_estimate

__all__ = ["CriterionResult", "CRITERIA", "SUITES", "run_suite", "run_criterion"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: float
    threshold: float
    detail: str
    runtime_s: float

    def line(self) -> str:
        word = "PASS" if self.passed else "FAIL"
        return (f"[{word}] criterion {self.number:>2} {self.name}: "
                f"measured {self.measured:.6g} vs threshold {self.threshold:.6g} "
                f"({self.detail}; {self.runtime_s:.1f}s)")


_RUN_CACHE: dict = {}


def _cached_simulate(config: SimConfig):
    key = json.dumps({k: str(v) for k, v in config.to_flat_dict().items()},
                     sort_keys=True)
    if key not in _RUN_CACHE:
        _RUN_CACHE[key] = simulate(config)
    return _RUN_CACHE[key]


def _timed(fn):
    start = time.perf_counter()
    result = fn()
    return result, time.perf_counter() - start


# ---------------------------------------------------------------------------
# 1. momentum conservation

def criterion_momentum_conservation() -> CriterionResult:
    tol = 1e-12

    def work():
        worst = 0.0
        for gamma in (0.0, 0.5, 1.0):
            # Projection keeps speeds on the initial energy sphere so the
            # fixed-dt run stays inside the substepper's comfort zone even at
            # gamma = 1 over this long horizon; it rescales about the mean and
            # therefore does not disturb the momentum cancellation under test.
            cfg = SimConfig(gamma=gamma, n_particles=256, dt=0.01, horizon=10.0,
                            replicas=1, seed=101, snapshot_stride=1000,
                            energy_projection=True)
            result = _cached_simulate(cfg)
            log = result.logs[0]
            p = log.conserved[:, :3]
            e0 = log.conserved[0, 3]
            scale = max(1.0, np.sqrt(256 * e0))
            dev = np.max(np.abs(p - p[0])) / scale
            worst = max(worst, float(dev))
        return worst

    worst, dt_s = _timed(work)
    return CriterionResult(
        1, "momentum conservation", worst <= tol, worst, tol,
        "max relative momentum deviation over 1000 steps, gamma in {0,0.5,1}",
        dt_s,
    )


# ---------------------------------------------------------------------------
# 2. energy first-order drift

def criterion_energy_drift() -> CriterionResult:
    def work():
        drifts = {}
        for dt in (0.01, 0.005):
            cfg = SimConfig(gamma=0.5, n_particles=512, dt=dt, horizon=1.0,
                            replicas=16, seed=102,
                            snapshot_stride=max(1, int(round(1.0 / dt))))
            result = _cached_simulate(cfg)
            deltas = [log.conserved[-1, 3] - log.conserved[0, 3]
                      for log in result.logs]
            drifts[dt] = abs(float(np.mean(deltas)))
        ratio = drifts[0.01] / drifts[0.005]

        proj = SimConfig(gamma=0.5, n_particles=512, dt=0.01, horizon=1.0,
                         replicas=16, seed=102, snapshot_stride=100,
                         energy_projection=True)
        result = _cached_simulate(proj)
        rel = max(
            float(np.max(np.abs(log.conserved[:, 3] - log.conserved[0, 3]))
                  / log.conserved[0, 3])
            for log in result.logs
        )
        return ratio, rel

    (ratio, rel), dt_s = _timed(work)
    passed = 1.5 <= ratio <= 3.0 and rel <= 1e-12
    return CriterionResult(
        2, "energy first-order drift", passed, ratio, 3.0,
        f"dt-halving drift ratio (want [1.5, 3]); projected relative energy "
        f"deviation {rel:.2e} (want <= 1e-12)",
        dt_s,
    )


# ---------------------------------------------------------------------------
# 3. Povzner sweep

def criterion_povzner_sweep() -> CriterionResult:
    rtol = 1e-9
    n = 10 ** 6

    def work():
        rng = np.random.default_rng(103)
        x = rng.uniform(0.0, 100.0, n)
        y = rng.uniform(0.0, 100.0, n)
        p = rng.uniform(4.0, 40.0, n)
        gamma = rng.uniform(np.nextafter(0.0, 1.0), 1.0, n)
        lhs, rhs = povzner_sides(x, y, p, gamma)
        scale = np.maximum(np.abs(lhs), np.maximum(np.abs(rhs), 1.0))
        violations = int(np.sum(lhs - rhs > rtol * scale))
        # spot-check the log-space path agrees with the direct one
        gap_direct = rhs[:100] - lhs[:100]
        gap_fn = np.array([povzner_gap(x[i], y[i], p[i], gamma[i])
                           for i in range(100)])
        mismatch = float(np.max(np.abs(gap_fn - gap_direct)
                                / np.maximum(np.abs(gap_direct), 1.0)))
        return violations, mismatch

    (violations, mismatch), dt_s = _timed(work)
    passed = violations == 0 and mismatch <= 1e-6
    return CriterionResult(
        3, "Povzner inequality sweep", passed, float(violations), 0.0,
        f"violations beyond 1e-9 relative among {n} samples; "
        f"log-path spot mismatch {mismatch:.2e}",
        dt_s,
    )


# ---------------------------------------------------------------------------
# 4. ODE comparison bound

def criterion_ode_comparison() -> CriterionResult:
    def work():
        rng = np.random.default_rng(104)
        t_grid = np.concatenate([[1e-6], np.geomspace(0.05, 10.0, 50)])
        violations = 0
        worst = 0.0
        for _ in range(100):
            params = MomentOdeParams(
                a=rng.uniform(0.2, 5.0), b=rng.uniform(0.0, 3.0),
                c=rng.uniform(0.0, 3.0), alpha=rng.uniform(0.1, 2.0),
                beta=rng.uniform(0.05, 0.9),
            )
            h0 = 10.0 ** rng.uniform(-1.0, 3.0)
            traj = moment_ode_solve(params, h0, t_grid)
            for t, h in zip(traj.times[1:], traj.h[1:]):
                bound = moment_ode_bound(params, float(t))
                excess = (h - bound) / max(bound, 1.0)
                worst = max(worst, float(excess))
                if excess > 1e-6:
                    violations += 1
        return violations, worst

    (violations, worst), dt_s = _timed(work)
    return CriterionResult(
        4, "moment ODE comparison bound", violations == 0, float(violations), 0.0,
        f"violations over 100 random parameter sets x 50 probe times; "
        f"worst relative excess {worst:.2e}",
        dt_s,
    )


# ---------------------------------------------------------------------------
# 5. F/G ladder bounds

def criterion_ladder_bounds() -> CriterionResult:
    a, t = 1.0, 1.0
    tol = 1e-9

    def work():
        worst = 0.0
        for m in range(1, 6):
            for n in range(m + 1, 41):
                f_val, _ = hierarchy_weights(m, n - 1, a, t)
                worst = max(worst, f_val - f_tail_bound(m, n, a, t))
            f_parts = [hierarchy_weights(m, ell, a, t)[0] for ell in range(m, 61)]
            g_parts = [ell * hierarchy_weights(m, ell, a, t)[1]
                       for ell in range(m, 61)]
            worst = max(worst, float(np.cumsum(f_parts).max() - f_sum_bound(m, a, t)))
            worst = max(worst, float(np.cumsum(g_parts).max() - g_sum_bound(m, a, t)))

        # ladder vs nested quadrature of the iterated-integral definitions
        from scipy.integrate import quad

        def f_quad(m, ell, t_val):
            if m > ell:
                return 1.0
            return a * m * quad(
                lambda s: np.exp(-a * m * (t_val - s)) * f_quad(m + 1, ell, s),
                0.0, t_val, epsabs=1e-10, epsrel=1e-10,
            )[0]

        def g_quad(m, ell, t_val):
            if m == ell:
                return np.exp(-a * m * t_val)
            return a * m * quad(
                lambda s: np.exp(-a * m * (t_val - s)) * g_quad(m + 1, ell, s),
                0.0, t_val, epsabs=1e-10, epsrel=1e-10,
            )[0]

        quad_err = 0.0
        for m in range(1, 4):
            for ell in range(m, 6):
                f_val, g_val = hierarchy_weights(m, ell, a, t)
                quad_err = max(quad_err, abs(f_val - f_quad(m, ell, t)),
                               abs(g_val - g_quad(m, ell, t)))
        return worst, quad_err

    (worst, quad_err), dt_s = _timed(work)
    passed = worst <= tol and quad_err <= 1e-6
    return CriterionResult(
        5, "F/G ladder bounds", passed, worst, tol,
        f"worst bound excess (tail, F-sum, G-sum); quadrature mismatch "
        f"{quad_err:.2e} (want <= 1e-6)",
        dt_s,
    )


# ---------------------------------------------------------------------------
# 6./7. Maxwellian-molecule oracle pair (shared run)

def _maxwellian_run():
    cfg = SimConfig(gamma=0.0, n_particles=2000, dt=0.01, horizon=1.0,
                    replicas=32, seed=106, snapshot_stride=10,
                    energy_projection=True)
    return _cached_simulate(cfg)


def criterion_maxwellian_oracle() -> CriterionResult:
    def work():
        result = _maxwellian_run()
        times = result.snapshot_times
        stack0 = result.velocities_at(times[0])
        m2_0, _ = polynomial_moment(stack0, 2.0)
        m4_0, _ = polynomial_moment(stack0, 4.0)
        worst = 0.0
        for t in times[1:]:
            stack = result.velocities_at(t)
            meas, se = polynomial_moment(stack, 4.0)
            pred = maxwellian_m4_trajectory(m2_0, m4_0, float(t))
            allowed = max(0.05 * abs(pred), 3.0 * se)
            worst = max(worst, abs(meas - pred) / allowed)
        return worst

    worst, dt_s = _timed(work)
    return CriterionResult(
        6, "Maxwellian m4 oracle equivalence", worst <= 1.0, worst, 1.0,
        "max |m4 - oracle| over t in (0,1], as a fraction of max(5%, 3*stderr)",
        dt_s,
    )


def criterion_maxwellian_monotonicity() -> CriterionResult:
    # Faithful transcription of the stated check.  From uniform-ball data the
    # fourth moment provably rises toward (5/3) m2^2, so this criterion fails
    # by physics; see the companion uniform-bound check below.
    def work():
        result = _maxwellian_run()
        times = result.snapshot_times
        worst = 0.0
        for p in (4.0, 6.0, 8.0):
            series = [polynomial_moment(result.velocities_at(t), p)
                      for t in times]
            m_init = series[0][0]
            idx = int(np.argmax([m for m, _ in series]))
            sup, se_sup = series[idx]
            allowed = m_init * (1.0 + 3.0 * se_sup / max(sup, 1e-300))
            worst = max(worst, sup / allowed)
        return worst

    worst, dt_s = _timed(work)
    return CriterionResult(
        7, "Maxwellian moment monotonicity", worst <= 1.0, worst, 1.0,
        "max over p in {4,6,8} of sup_t m_p / (m_p(0) (1 + 3 rel stderr))",
        dt_s,
    )


def maxwellian_uniform_bound_companion() -> CriterionResult:
    # The support-radius form of the same estimate: sup_t m_p <= (2 r0^2 p)^(p/2).
    def work():
        result = _maxwellian_run()
        times = result.snapshot_times
        r0 = 1.0
        worst = 0.0
        for p in (4.0, 6.0, 8.0):
            sup = max(polynomial_moment(result.velocities_at(t), p)[0]
                      for t in times)
            worst = max(worst, sup / (2.0 * r0 ** 2 * p) ** (p / 2.0))
        return worst

    worst, dt_s = _timed(work)
    return CriterionResult(
        0, "Maxwellian uniform moment bound (companion to 7)", worst <= 1.0,
        worst, 1.0, "max over p of sup_t m_p / (2 r0^2 p)^(p/2)", dt_s,
    )


# ---------------------------------------------------------------------------
# 8. exponential moment uniform in time

def _mann_kendall_growth_p(series: np.ndarray) -> tuple:
    """(tau, p) of the Kendall trend test of the series against time order."""
    tau, p = kendalltau(np.arange(series.size), series)
    return float(tau), float(p)


def criterion_exp_moment_uniform() -> CriterionResult:
    def work():
        # Projected: over this long horizon the raw scheme's O(dt) energy
        # inflation compounds and would drown the uniform-in-time statement
        # under a discretization artifact (criterion 2 quantifies that
        # artifact at its own scale).
        cfg = SimConfig(gamma=0.5, n_particles=512, dt=0.02, horizon=10.0,
                        replicas=32, seed=108, snapshot_stride=10,
                        energy_projection=True)
        result = _cached_simulate(cfg)
        times = result.snapshot_times
        p_fit = (4.0, 6.0, 8.0)
        sups = [max(polynomial_moment(result.velocities_at(t), p)[0]
                    for t in times) for p in p_fit]
        c_fit = fit_moment_constant(p_fit, sups, 0.5)
        xi = 0.25 * exp_series_threshold(c_fit, 0.5)
        spec = ExpMomentSpec(xi=xi)
        series = np.array([
            exponential_moment(result.velocities_at(t), spec, 0.5).estimate
            for t in times
        ])
        ratio = float(series.max() / series.mean())
        tau, p_val = _mann_kendall_growth_p(series)
        return ratio, tau, p_val, xi, c_fit

    (ratio, tau, p_val, xi, c_fit), dt_s = _timed(work)
    growth = tau > 0.0 and p_val <= 0.05
    passed = ratio <= 2.0 and not growth
    return CriterionResult(
        8, "exponential moment uniform in time", passed, ratio, 2.0,
        f"max/mean of exp-moment series at xi={xi:.4g} (C_fit={c_fit:.4g}); "
        f"Kendall tau={tau:.3f}, p={p_val:.3f} (growth needs tau>0, p<=0.05)",
        dt_s,
    )


# ---------------------------------------------------------------------------
# 9. moment growth exponent

def criterion_moment_growth() -> CriterionResult:
    def work():
        # Projected for the same reason as criterion 8: sup_t m_p should
        # reflect the moment shape of the conserved dynamics, not the energy
        # inflation of the raw scheme.
        cfg = SimConfig(gamma=1.0, n_particles=512, dt=0.01, horizon=2.0,
                        replicas=32, seed=109, snapshot_stride=20,
                        energy_projection=True)
        result = _cached_simulate(cfg)
        times = result.snapshot_times
        p_values = np.arange(4.0, 17.0, 2.0)
        sups = [max(polynomial_moment(result.velocities_at(t), p)[0]
                    for t in times) for p in p_values]
        return moment_growth_exponent(p_values, sups)

    slope, dt_s = _timed(work)
    threshold = (2.0 + 1.0) / 4.0 + 0.15
    return CriterionResult(
        9, "moment growth exponent", slope <= threshold, slope, threshold,
        "slope of log(sup_t m_p^(1/p)) vs log p at gamma=1, p in {4..16}",
        dt_s,
    )


# ---------------------------------------------------------------------------
# 10. chaos decorrelation + self-convergence

def criterion_chaos_decorrelation() -> CriterionResult:
    def work():
        n_list = (128, 256, 512, 1024)
        stacks, covs = [], []
        for n in n_list:
            # A relaxing bimodal start creates an O(1/N) pair correlation with
            # prefactor ~5; from near-equilibrium data the prefactor is ~0.05,
            # which no replica budget on this box can raise above the ANOVA
            # estimator's noise floor (both scale as 1/N).  256 replicas put
            # each |cov| estimate at ~4.6 sigma.
            cfg = SimConfig(gamma=0.5, n_particles=n, dt=0.01, horizon=0.5,
                            replicas=256, seed=110, snapshot_stride=50,
                            initial_kind="two_ball_mixture",
                            initial_offset=(2.0, 0.0, 0.0),
                            initial_mixture_weight=0.5)
            result = _cached_simulate(cfg)
            stack = result.velocities_at(result.snapshot_times[-1])
            stacks.append(stack)
            cov, _ = chaos_covariance(stack, "speed_sq")
            covs.append(abs(cov))
        slope = float(np.polyfit(np.log(n_list), np.log(covs), 1)[0])

        w2s, ses = [], []
        for small, large in zip(stacks, stacks[1:]):
            w2, se = w2_group_estimate(small, large, seed=110)
            w2s.append(w2)
            ses.append(se)
        mono_ok = all(
            w2s[i + 1] <= w2s[i] + 3.0 * np.hypot(ses[i], ses[i + 1])
            for i in range(len(w2s) - 1)
        )
        return slope, mono_ok, w2s

    (slope, mono_ok, w2s), dt_s = _timed(work)
    passed = (-1.3 <= slope <= -0.7) and mono_ok
    return CriterionResult(
        10, "chaos decorrelation", passed, slope, -1.0,
        f"log-log slope of |Cov| vs N (want -1 +/- 0.3); self-convergence W2 "
        f"column {['%.4f' % w for w in w2s]} non-increasing: {mono_ok}",
        dt_s,
    )


# ---------------------------------------------------------------------------
# 11. BBGKY weak-form residual

_BUMPS = (
    GaussianBump(centers=[(0.0, 0.0, 0.0)], widths=[1.0]),
    GaussianBump(centers=[(0.5, 0.0, 0.0)], widths=[1.0]),
    GaussianBump(centers=[(0.0, -0.5, 0.3)], widths=[1.0]),
)


def criterion_bbgky_residual() -> CriterionResult:
    def work():
        runs = {}
        for dt in (0.01, 0.005):
            cfg = SimConfig(gamma=0.5, n_particles=1024, dt=dt, horizon=0.5,
                            replicas=64, seed=111, snapshot_stride=1)
            runs[dt] = _cached_simulate(cfg)
        worst = 0.0
        details = []
        for bump in _BUMPS:
            res = {dt: bbgky_residual(runs[dt], 1, bump, 0.5, mode="finite_N",
                                      gamma=0.5)
                   for dt in runs}
            (r1, s1), (r2, s2) = res[0.01], res[0.005]
            # one-parameter fit |res| ~ C dt through both resolutions, then
            # each point must sit within 3 stderr of the fitted line
            c_hat = max(0.0, (4.0 * abs(r1) + 2.0 * abs(r2)) / (5.0 * 0.01))
            e1 = (abs(r1) - c_hat * 0.01) / max(3.0 * s1, 1e-300)
            e2 = (abs(r2) - c_hat * 0.005) / max(3.0 * s2, 1e-300)
            worst = max(worst, e1, e2)
            details.append(f"res(dt=0.01)={r1:.2e}+-{s1:.2e}, "
                           f"res(dt=0.005)={r2:.2e}+-{s2:.2e}, C={c_hat:.3g}")
        return worst, details

    (worst, details), dt_s = _timed(work)
    return CriterionResult(
        11, "BBGKY weak-form residual", worst <= 1.0, worst, 1.0,
        "max over 3 bumps of (|residual| - C dt)/(3 stderr); " + "; ".join(details),
        dt_s,
    )


# ---------------------------------------------------------------------------
# 12. stability shape

def criterion_stability_shape() -> CriterionResult:
    eta = 0.1
    m, t_final = 1, 1.0

    def work():
        deltas = (0.05, 0.1, 0.2)
        spec_a = InitialSpec(kind="uniform_ball", r0=1.0)
        w2s, ses, u0s = [], [], []
        for k, delta in enumerate(deltas):
            cfg = SimConfig(gamma=0.5, n_particles=256, dt=0.01, horizon=1.0,
                            replicas=32, seed=112 + k, snapshot_stride=100)
            spec_b = InitialSpec(kind="two_ball_mixture", r0=1.0,
                                 offset=(delta, 0.0, 0.0), mixture_weight=0.0)
            report = coupled_simulate(cfg, spec_a, spec_b, m_list=(1,))
            w2, se = w2_group_estimate(report.final_a, report.final_b, seed=112)
            w2s.append(w2)
            ses.append(se)
            u0s.append(report.u0)
        mono_ok = all(
            w2s[i + 1] >= w2s[i] - 3.0 * np.hypot(ses[i], ses[i + 1])
            for i in range(len(w2s) - 1)
        )
        c_per_delta = [
            w2 / (np.sqrt(m * (1.0 + t_final)) * np.sqrt(u0) ** (1.0 - eta))
            for w2, u0 in zip(w2s, u0s)
        ]
        c_fit = max(c_per_delta)
        spread = c_fit / min(c_per_delta)
        bound_ok = all(
            w2 <= stability_rhs(m, t_final, u0, eta, c_fit) * (1.0 + 1e-12)
            for w2, u0 in zip(w2s, u0s)
        )
        return mono_ok, spread, bound_ok, c_fit, w2s

    (mono_ok, spread, bound_ok, c_fit, w2s), dt_s = _timed(work)
    passed = mono_ok and bound_ok and spread <= 3.0
    return CriterionResult(
        12, "stability shape", passed, spread, 3.0,
        f"spread of per-delta fitted constants (one C={c_fit:.3g} fits all); "
        f"W2 column {['%.4f' % w for w in w2s]} monotone in delta: {mono_ok}",
        dt_s,
    )


# ---------------------------------------------------------------------------
# registry

CRITERIA = {
    1: criterion_momentum_conservation,
    2: criterion_energy_drift,
    3: criterion_povzner_sweep,
    4: criterion_ode_comparison,
    5: criterion_ladder_bounds,
    6: criterion_maxwellian_oracle,
    7: criterion_maxwellian_monotonicity,
    8: criterion_exp_moment_uniform,
    9: criterion_moment_growth,
    10: criterion_chaos_decorrelation,
    11: criterion_bbgky_residual,
    12: criterion_stability_shape,
}

SUITES = {
    "kernels": (3,),
    "conservation": (1, 2),
    "inequalities": (4, 5),
    "oracle": (6, 7),
    "chaos": (10, 11),
    "stability": (8, 9, 12),
}


def run_criterion(number: int) -> CriterionResult:
    try:
        fn = CRITERIA[number]
    except KeyError:
        raise ValueError(f"no criterion {number}; valid: {sorted(CRITERIA)}") from None
    return fn()


def run_suite(suite: str) -> list:
    try:
        numbers = SUITES[suite]
    except KeyError:
        raise ValueError(
            f"unknown suite {suite!r}; valid suites: {sorted(SUITES)}"
        ) from None
    return [run_criterion(k) for k in numbers]
