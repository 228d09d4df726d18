"""Gallery of the analytic comparison bounds, no simulation involved.

Four short numeric exhibits:
  1. the moment comparison ODE h' = -a h^(1+alpha) + b h + c h^(1-beta)
     solved on a grid and checked against its closed-form ceiling,
  2. the F/G ladder weights with their tail and sum bounds,
  3. the exponential-moment series threshold: partial sums converge below
     the critical xi and blow past any finite value above it,
  4. the perturbation-stability response and its eta cutoff.

Runs in a few seconds.
"""

import numpy as np

from kaclandau.inequalities import (
    MomentOdeParams,
    exp_series_partial_sums,
    exp_series_threshold,
    f_sum_bound,
    f_tail_bound,
    g_sum_bound,
    hierarchy_weights,
    moment_ode_bound,
    moment_ode_solve,
    stability_cutoff,
    stability_rhs,
)


def exhibit_ode():
    print("-- moment comparison ODE (p = 6, gamma = 0.5, r0 = 1) --")
    params = MomentOdeParams.from_moment_system(6, 0.5)
    t_grid = np.geomspace(1e-3, 5.0, 9)
    print(f"{'h0':>8} " + " ".join(f"{t:>9.3g}" for t in t_grid))
    for h0 in (0.5, 5.0, 500.0):
        traj = moment_ode_solve(params, h0, t_grid)
        print(f"{h0:8.1f} " + " ".join(f"{h:>9.3g}" for h in traj.h))
    bounds = [moment_ode_bound(params, t) for t in t_grid]
    print(f"{'ceiling':>8} " + " ".join(f"{b:>9.3g}" for b in bounds))
    print("every trajectory sits below the h0-independent ceiling\n")


def exhibit_ladder():
    print("-- F/G ladder weights (a = 1, t = 1) --")
    print(f"{'m':>3} {'ell':>4} {'F':>10} {'G':>10} {'F tail bound @ ell+1':>21}")
    for m, ell in ((1, 1), (1, 2), (2, 4), (2, 5), (3, 6)):
        f, g = hierarchy_weights(m, ell, 1.0, 1.0)
        tail = f_tail_bound(m, ell + 1, 1.0, 1.0)
        print(f"{m:3d} {ell:4d} {f:10.6f} {g:10.6f} {tail:21.6f}")
    m = 2
    f_sum = sum(hierarchy_weights(m, ell, 1.0, 1.0)[0] for ell in range(m, 61))
    g_sum = sum(ell * hierarchy_weights(m, ell, 1.0, 1.0)[1]
                for ell in range(m, 61))
    print(f"sum_ell F_2^ell = {f_sum:.6f}  <=  bound {f_sum_bound(m, 1.0, 1.0):.6f}")
    print(f"sum_ell ell G_2^ell = {g_sum:.6f}  <=  bound "
          f"{g_sum_bound(m, 1.0, 1.0):.6f}  (exact value m e^t = {m * np.e:.6f})\n")


def exhibit_series():
    print("-- exponential moment series threshold (gamma = 0.5, C = 1) --")
    xi_star = exp_series_threshold(1.0, 0.5)
    print(f"critical xi* = {xi_star:.6f}")
    for label, xi in (("0.5 xi*", 0.5 * xi_star), ("2.0 xi*", 2.0 * xi_star)):
        sums = exp_series_partial_sums(xi, 1.0, 0.5, n_terms=400)
        tail_flat = np.isfinite(sums[-1]) and sums[-1] - sums[-80] < 1e-9 * sums[-1]
        print(f"xi = {label}: S_100 = {sums[100]:.6g}, S_400 = {sums[-1]:.6g} "
              f"({'converged' if tail_flat else 'diverging'})")
    print()


def exhibit_stability():
    print("-- perturbation stability (m = 1, T = 1, C = 1) --")
    print(f"{'eta':>6} {'u0':>6} {'response':>10}")
    for eta in (0.05, 0.1, 0.2):
        for u0 in (0.01, 0.04):
            print(f"{eta:6.2f} {u0:6.2f} {stability_rhs(1, 1.0, u0, eta, 1.0):10.6f}")
    print(f"cutoff eta for u0 = 0.04, c1 = 10, gamma = 0.5: "
          f"{stability_cutoff(0.04, 10.0, 0.5):.6f}")


def main():
    exhibit_ode()
    exhibit_ladder()
    exhibit_series()
    exhibit_stability()


if __name__ == "__main__":
    main()
