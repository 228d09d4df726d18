"""Tests for the closed-form bounds and small ODE systems.

Reference values come from independent closed forms: the Riccati solution of
the pure-decay moment ODE, the pure-death ladder weights
G_m^ell(t) = C(ell-1, ell-m) e^(-a m t) (1 - e^(-a t))^(ell-m) with
F_m^ell = 1 - sum_j G_m^j, and a hand-integrated one-level recursion with an
exponential continuation profile.
"""

from math import comb

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kaclandau.inequalities import (
    HierarchyParams,
    MomentOdeParams,
    exp_series_partial_sums,
    exp_series_threshold,
    f_sum_bound,
    f_tail_bound,
    g_sum_bound,
    gronwall_step,
    hierarchy_weights,
    moment_ode_bound,
    moment_ode_bound_log,
    moment_ode_solve,
    polynomial_moment_bound,
    regime_split_time,
    stability_cutoff,
    stability_rhs,
    u_recursion_bound,
)


def closed_g(m, ell, a, t):
    return comb(ell - 1, ell - m) * np.exp(-a * m * t) * (1.0 - np.exp(-a * t)) ** (ell - m)


def closed_f(m, ell, a, t):
    return 1.0 - sum(closed_g(m, j, a, t) for j in range(m, ell + 1))


class TestMomentOde:
    def test_riccati_closed_form(self):
        # dh/dt = -h^2, h0 = 10 integrates to 1/(t + 0.1)
        params = MomentOdeParams(a=1.0, b=0.0, c=0.0, alpha=1.0, beta=0.0)
        grid = np.array([0.0, 0.1, 0.5, 1.0])
        traj = moment_ode_solve(params, 10.0, grid)
        assert_allclose(traj.h, 1.0 / (grid + 0.1), rtol=1e-6)
        assert not traj.blew_up

    def test_pure_exponential_growth(self):
        params = MomentOdeParams(a=0.0, b=0.7, c=0.0, alpha=1.0, beta=0.0)
        grid = np.linspace(0.0, 2.0, 9)
        traj = moment_ode_solve(params, 3.0, grid)
        assert_allclose(traj.h, 3.0 * np.exp(0.7 * grid), rtol=1e-6)

    def test_blowup_detected_and_padded(self):
        params = MomentOdeParams(a=0.0, b=1.0, c=0.0, alpha=0.0, beta=0.0)
        grid = np.linspace(0.0, 800.0, 81)
        traj = moment_ode_solve(params, 1.0, grid)
        assert traj.blew_up
        assert_allclose(traj.blowup_time, np.log(1e300), rtol=1e-3)
        assert np.isinf(traj.h[-1])

    def test_single_point_grid(self):
        params = MomentOdeParams(a=1.0, b=0.0, c=0.0, alpha=1.0, beta=0.0)
        traj = moment_ode_solve(params, 2.0, np.array([0.0]))
        assert traj.h[0] == 2.0

    def test_solve_validation(self):
        params = MomentOdeParams(a=1.0, b=0.0, c=0.0, alpha=1.0, beta=0.0)
        with pytest.raises(ValueError, match="h0"):
            moment_ode_solve(params, 0.0, np.array([0.0, 1.0]))
        with pytest.raises(ValueError, match="increasing"):
            moment_ode_solve(params, 1.0, np.array([0.0, 0.0, 1.0]))

    def test_params_validation(self):
        with pytest.raises(ValueError, match="non-negative"):
            MomentOdeParams(a=-1.0, b=0.0, c=0.0, alpha=1.0, beta=0.0)
        with pytest.raises(ValueError, match="non-negative"):
            MomentOdeParams(a=1.0, b=0.0, c=0.0, alpha=-0.1, beta=0.0)

    def test_from_moment_system_coefficients(self):
        params = MomentOdeParams.from_moment_system(6.0, 0.5, r0=2.0)
        assert_allclose(params.a, 6.0, rtol=1e-15)
        assert_allclose(params.b, 12.0 * np.sqrt(2.0), rtol=1e-15)
        assert_allclose(params.c, 8.0 * 6.0**2.25, rtol=1e-15)
        assert_allclose(params.alpha, 0.125, rtol=1e-15)
        assert_allclose(params.beta, 0.375, rtol=1e-15)

    def test_from_moment_system_domain(self):
        with pytest.raises(ValueError, match="gamma"):
            MomentOdeParams.from_moment_system(6.0, 0.0)
        with pytest.raises(ValueError, match="4-gamma"):
            MomentOdeParams.from_moment_system(3.0, 0.5)
        with pytest.raises(ValueError, match="r0"):
            MomentOdeParams.from_moment_system(6.0, 0.5, r0=0.0)


class TestComparisonBound:
    def test_plugin_value(self):
        # only the transient term survives: (2/(a alpha t))^(1/alpha) = 1
        params = MomentOdeParams(a=2.0, b=0.0, c=0.0, alpha=1.0, beta=0.0)
        assert_allclose(moment_ode_bound(params, 1.0), 1.0, rtol=1e-14)

    def test_trajectory_sits_below(self):
        params = MomentOdeParams.from_moment_system(6.0, 0.5, r0=1.0)
        grid = np.concatenate([[0.0], np.geomspace(0.01, 5.0, 40)])
        traj = moment_ode_solve(params, 1.0, grid)
        for t, h in zip(grid[1:], traj.h[1:]):
            assert h <= moment_ode_bound(params, t) * (1.0 + 1e-9)

    def test_bound_independent_of_h0(self):
        params = MomentOdeParams.from_moment_system(8.0, 1.0)
        grid = np.geomspace(0.05, 2.0, 20)
        for h0 in (0.5, 5.0, 500.0):
            traj = moment_ode_solve(params, h0, np.concatenate([[0.0], grid]))
            for t, h in zip(grid, traj.h[1:]):
                assert h <= moment_ode_bound(params, t) * (1.0 + 1e-9)

    def test_requires_positive_time(self):
        params = MomentOdeParams(a=1.0, b=0.0, c=0.0, alpha=1.0, beta=0.0)
        with pytest.raises(ValueError, match="t > 0"):
            moment_ode_bound(params, 0.0)

    def test_log_variant_survives_tiny_alpha(self):
        params = MomentOdeParams(a=1.0, b=2.0, c=0.0, alpha=1e-3, beta=0.0)
        log_val = moment_ode_bound_log(params, 1.0)
        assert np.isfinite(log_val) and log_val > 709.0
        assert moment_ode_bound(params, 1.0) == np.inf


class TestEnvelopeAndThreshold:
    def test_regime_split_values(self):
        assert_allclose(regime_split_time(4.0, 1.0), 0.353553390593274, rtol=1e-14)
        assert regime_split_time(7.0, 0.0) == 1.0

    def test_polynomial_bound_value(self):
        assert_allclose(polynomial_moment_bound(4.0, 1.0, 1.0), 8.0, rtol=1e-13)
        assert polynomial_moment_bound(4.0, 1.0, 0.0) == 0.0

    def test_polynomial_bound_overflow_to_inf(self):
        assert polynomial_moment_bound(400.0, 1.0, 10.0) == np.inf

    def test_threshold_values(self):
        assert_allclose(exp_series_threshold(1.0, 1.0), 3.0 / (4.0 * np.e), rtol=1e-14)
        assert_allclose(exp_series_threshold(1.0, 0.0), 1.0 / (2.0 * np.e), rtol=1e-14)
        with pytest.raises(ValueError, match="c_const"):
            exp_series_threshold(0.0, 1.0)

    def test_partial_sums_converge_below_threshold(self):
        xi_star = exp_series_threshold(1.0, 1.0)
        sums = exp_series_partial_sums(0.5 * xi_star, 1.0, 1.0, n_terms=200)
        assert sums[0] == 1.0
        assert np.isfinite(sums[-1])
        assert sums[-1] - sums[100] <= 1e-8 * sums[-1]

    def test_partial_sums_diverge_above_threshold(self):
        xi_star = exp_series_threshold(1.0, 1.0)
        sums = exp_series_partial_sums(2.0 * xi_star, 1.0, 1.0, n_terms=200)
        assert np.isinf(sums[-1]) or sums[-1] > 1e10
        assert np.all(np.diff(sums[np.isfinite(sums)]) >= 0.0)

    def test_custom_moments_recover_exponential(self):
        # log m = 0 for every term turns the series into sum xi^n / n!
        sums = exp_series_partial_sums(0.3, 1.0, 1.0, n_terms=200,
                                       log_moments=np.zeros(201))
        assert_allclose(sums[-1], np.exp(0.3), rtol=1e-12)

    def test_partial_sums_validation(self):
        with pytest.raises(ValueError, match="xi"):
            exp_series_partial_sums(0.0, 1.0, 1.0)
        with pytest.raises(ValueError, match="shape"):
            exp_series_partial_sums(0.1, 1.0, 1.0, n_terms=5,
                                    log_moments=np.zeros(3))


class TestLadderWeights:
    def test_pinned_values(self):
        f11, g11 = hierarchy_weights(1, 1, 1.0, 1.0)
        assert_allclose(f11, 0.632120558828558, rtol=1e-12)
        assert_allclose(g11, 0.367879441171442, rtol=1e-12)
        f12, g12 = hierarchy_weights(1, 2, 1.0, 1.0)
        assert_allclose(f12, 0.399576400893728, rtol=1e-12)
        assert_allclose(g12, 0.232544157934830, rtol=1e-12)
        f25, g25 = hierarchy_weights(2, 5, 1.0, 1.0)
        assert_allclose(f25, 0.394605739656481, rtol=1e-12)
        assert_allclose(g25, 0.136732191200552, rtol=1e-12)
        f33, _ = hierarchy_weights(3, 3, 1.0, 1.0)
        assert_allclose(f33, 0.950212931632136, rtol=1e-12)
        f24, g24 = hierarchy_weights(2, 4, 1.0, 1.0)
        assert_allclose(f24, 0.531337930857033, rtol=1e-12)
        assert_allclose(g24, 0.162230356168857, rtol=1e-12)

    def test_sweep_against_closed_forms(self):
        for a in (1.0, 1.7):
            for t in (0.3, 1.0):
                for ell in range(1, 9):
                    for m in range(1, ell + 1):
                        f, g = hierarchy_weights(m, ell, a, t)
                        assert_allclose(g, closed_g(m, ell, a, t), rtol=1e-9,
                                        err_msg=f"G m={m} ell={ell} a={a} t={t}")
                        assert_allclose(f, closed_f(m, ell, a, t), rtol=1e-9,
                                        atol=1e-12,
                                        err_msg=f"F m={m} ell={ell} a={a} t={t}")

    def test_recursion_satisfied(self):
        # d/dt X_m = a m (X_{m+1} - X_m), checked by central differences, with
        # F closing at 1 and G closing at 0 above the top level
        a, t, ell = 1.3, 0.6, 5
        eps = 1e-6
        for m in range(2, ell + 1):
            for idx, closure in ((0, 1.0), (1, 0.0)):
                up = hierarchy_weights(m, ell, a, t + eps)[idx]
                dn = hierarchy_weights(m, ell, a, t - eps)[idx]
                here = hierarchy_weights(m, ell, a, t)[idx]
                above = hierarchy_weights(m + 1, ell, a, t)[idx] if m < ell else closure
                assert_allclose((up - dn) / (2 * eps), a * m * (above - here),
                                rtol=1e-5, atol=1e-8)

    def test_weights_are_probabilities(self):
        rng = np.random.default_rng(239)
        for _ in range(50):
            ell = int(rng.integers(1, 10))
            m = int(rng.integers(1, ell + 1))
            a = float(rng.uniform(0.2, 3.0))
            t = float(rng.uniform(0.0, 2.0))
            f, g = hierarchy_weights(m, ell, a, t)
            assert -1e-12 <= f <= 1.0 + 1e-12
            assert -1e-12 <= g <= 1.0 + 1e-12

    def test_validation(self):
        with pytest.raises(ValueError, match="m <= ell"):
            hierarchy_weights(3, 2, 1.0, 1.0)
        with pytest.raises(ValueError, match="a must be positive"):
            hierarchy_weights(1, 2, 0.0, 1.0)
        with pytest.raises(ValueError, match="non-negative"):
            hierarchy_weights(1, 2, 1.0, -0.5)


class TestLadderBounds:
    def test_f_tail_dominates_ladder(self):
        for m in (1, 2):
            for n in (5, 8):
                for t in (0.25, 1.0):
                    f, _ = hierarchy_weights(m, n - 1, 1.0, t)
                    assert f <= f_tail_bound(m, n, 1.0, t) + 1e-12

    def test_f_tail_saturates_at_one(self):
        # once e^(-at) drops under m/n the exponent clips to zero
        assert f_tail_bound(3, 6, 1.0, 5.0) == 1.0

    def test_f_sum_dominates_truncated_sum(self):
        for m in (1, 2):
            for t in (0.25, 0.5, 1.0):
                total = sum(hierarchy_weights(m, ell, 1.0, t)[0]
                            for ell in range(m, 41))
                assert total <= f_sum_bound(m, 1.0, t) + 1e-9

    def test_g_sum_identity_and_bound(self):
        # exact identity: sum_ell ell G_m^ell(t) = m e^(at)
        for m in (1, 2):
            for a in (1.0, 1.5):
                t = 1.0
                total = sum(ell * closed_g(m, ell, a, t)
                            for ell in range(m, 200))
                assert_allclose(total, m * np.exp(a * t), rtol=1e-9)
                assert total <= g_sum_bound(m, a, t) + 1e-9


class TestGronwallStep:
    def test_exponential_profile_closed_form(self):
        m, a, t, u_m0 = 3, 1.2, 0.7, 0.4
        u1, q = 0.25, 0.9
        val = gronwall_step(lambda s: u1 * np.exp(-q * s), m, a, t, u_m0)
        assert_allclose(val, 0.481175704564173, rtol=1e-9)

    def test_zero_time_returns_initial(self):
        assert gronwall_step(lambda s: 1.0, 2, 1.0, 0.0, 0.37) == 0.37

    def test_monotone_in_continuation(self):
        lo = gronwall_step(lambda s: 0.0, 2, 1.0, 0.5, 0.1)
        hi = gronwall_step(lambda s: 1.0, 2, 1.0, 0.5, 0.1)
        assert hi > lo

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            gronwall_step(lambda s: 0.0, 2, 1.0, -0.1, 0.1)


class TestRecursionBound:
    def test_zero_horizon_plugin(self):
        params = HierarchyParams(a_cutoff=1.5, m=2, n=64, T=0.0, u0=0.01)
        assert_allclose(u_recursion_bound(params), 0.045625, rtol=1e-13)

    def test_validity_region_enforced(self):
        params = HierarchyParams(a_cutoff=1.0, m=30, n=64, T=0.5, u0=0.01)
        with pytest.raises(ValueError, match="validity region violated: need n >= 2 m exp"):
            u_recursion_bound(params)

    def test_bound_shrinks_with_n(self):
        lo = u_recursion_bound(HierarchyParams(a_cutoff=1.0, m=1, n=128, T=0.5, u0=0.0))
        hi = u_recursion_bound(HierarchyParams(a_cutoff=1.0, m=1, n=32, T=0.5, u0=0.0))
        assert lo < hi

    def test_params_validation(self):
        with pytest.raises(ValueError, match="a_cutoff"):
            HierarchyParams(a_cutoff=0.0, m=1, n=4, T=1.0, u0=0.0)
        with pytest.raises(ValueError, match="1 <= m <= n"):
            HierarchyParams(a_cutoff=1.0, m=5, n=4, T=1.0, u0=0.0)
        with pytest.raises(ValueError, match="non-negative"):
            HierarchyParams(a_cutoff=1.0, m=1, n=4, T=-1.0, u0=0.0)
        with pytest.raises(ValueError, match="c1, c2, c4"):
            HierarchyParams(a_cutoff=1.0, m=1, n=4, T=1.0, u0=0.0, c4=0.0)
        with pytest.raises(ValueError, match="eta"):
            HierarchyParams(a_cutoff=1.0, m=1, n=4, T=1.0, u0=0.0, eta=1.0)
        with pytest.raises(ValueError, match="gamma"):
            HierarchyParams(a_cutoff=1.0, m=1, n=4, T=1.0, u0=0.0, gamma=1.5)


class TestStability:
    def test_plugin_value(self):
        assert_allclose(stability_rhs(1, 0.0, 0.04, 0.5, 2.0),
                        0.894427190999916, rtol=1e-13)

    def test_doubling_m_scales_sqrt2(self):
        lo = stability_rhs(1, 1.0, 0.1, 0.3, 1.7)
        hi = stability_rhs(2, 1.0, 0.1, 0.3, 1.7)
        assert_allclose(hi / lo, np.sqrt(2.0), rtol=1e-13)

    def test_zero_distance_gives_zero(self):
        assert stability_rhs(3, 2.0, 0.0, 0.5, 1.0) == 0.0

    def test_rhs_validation(self):
        with pytest.raises(ValueError, match="eta"):
            stability_rhs(1, 1.0, 0.1, 0.0, 1.0)
        with pytest.raises(ValueError, match="u0"):
            stability_rhs(1, 1.0, -0.1, 0.5, 1.0)
        with pytest.raises(ValueError, match="m >= 1"):
            stability_rhs(0, 1.0, 0.1, 0.5, 1.0)

    def test_cutoff_value_and_monotonicity(self):
        assert_allclose(stability_cutoff(0.1, 1.0, 1.0),
                        1.926959818153498, rtol=1e-13)
        assert stability_cutoff(0.01, 1.0, 1.0) > stability_cutoff(0.1, 1.0, 1.0)

    def test_cutoff_validation(self):
        with pytest.raises(ValueError, match="u0"):
            stability_cutoff(0.0, 1.0, 1.0)
        with pytest.raises(ValueError, match="c1 > 0"):
            stability_cutoff(0.1, 0.0, 1.0)
