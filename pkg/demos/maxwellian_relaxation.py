"""Fourth-moment relaxation at gamma = 0 against the closed-form solution.

At gamma = 0 the fourth moment of the velocity law obeys a closed linear ODE:
m4(t) relaxes to (5/3) m2^2 at rate 8.  This script runs the particle system
from uniform-ball data, where m4 starts at (3/7) r0^4 and must *rise* toward
the Gaussian value, and prints the simulated moment next to the exact
trajectory with a z-score per probe time.

Runs in about a minute on one core.
"""

import numpy as np

from kaclandau.harness import SimConfig
from kaclandau.integrator import simulate
from kaclandau.observables import polynomial_moment
from kaclandau.oracle import maxwellian_m4_trajectory, m4_equilibrium

CONFIG = SimConfig(
    gamma=0.0,
    n_particles=800,
    dt=0.01,
    horizon=1.0,
    replicas=8,
    seed=7001,
    snapshot_stride=10,
    energy_projection=True,
)


def main():
    result = simulate(CONFIG)
    t0 = result.snapshot_times[0]
    m2_0, _ = polynomial_moment(result.velocities_at(t0), 2.0)
    m4_0, _ = polynomial_moment(result.velocities_at(t0), 4.0)

    print(f"gamma = {CONFIG.gamma}, N = {CONFIG.n_particles}, "
          f"replicas = {CONFIG.replicas}, dt = {CONFIG.dt}")
    print(f"initial m2 = {m2_0:.6f} (ball value 3/5 = 0.6)")
    print(f"initial m4 = {m4_0:.6f} (ball value 3/7 = {3 / 7:.6f})")
    print(f"equilibrium m4 = (5/3) m2^2 = {m4_equilibrium(m2_0):.6f}")
    print()
    print(f"{'t':>5} {'m4 simulated':>14} {'stderr':>10} {'m4 exact':>10} {'z':>7}")

    worst_rel = 0.0
    for t in result.snapshot_times:
        if not np.isclose(t % 0.1, 0.0, atol=1e-9) and not np.isclose(t % 0.1, 0.1, atol=1e-9):
            continue
        m4_t, se = polynomial_moment(result.velocities_at(t), 4.0)
        exact = maxwellian_m4_trajectory(m2_0, m4_0, float(t))
        z = (m4_t - exact) / se
        worst_rel = max(worst_rel, abs(m4_t - exact) / exact)
        print(f"{t:5.2f} {m4_t:14.6f} {se:10.6f} {exact:10.6f} {z:7.2f}")

    print()
    print(f"worst relative deviation: {100 * worst_rel:.1f}% "
          f"(the scheme carries an O(dt) bias in m4, about 3% at dt = 0.01; "
          f"halve dt and the late-time excess halves)")


if __name__ == "__main__":
    main()
