"""Independent reference solutions for acceptance testing.

At gamma = 0 the fourth moment of an isotropic zero-mean law closes into a
linear ODE: inserting phi = |v|^4 into the weak form of the limit dynamics
and using E[(w.v)^2] = |v|^2 m2 / 3 for isotropic w gives

    d/dt m4 = -8 m4 + (40/3) m2^2  =  -8 (m4 - (5/3) m2^2),

so m4 relaxes at rate 8 to (5/3) m2^2 while m2 stays fixed.  The Gaussian
equilibrium moments and a self-convergence table for hard potentials complete
the reference set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .integrator import simulate
from .transport import w2_group_estimate

__all__ = [
    "M4_RELAXATION_RATE",
    "IsotropicState",
    "m4_equilibrium",
    "maxwellian_m4_trajectory",
    "equilibrium_moments",
    "SelfConvergenceTable",
    "self_convergence_table",
]

M4_RELAXATION_RATE = 8.0


@dataclass(frozen=True)
class IsotropicState:
    """Moment state of an isotropic zero-mean law; m2 is conserved."""

    m2: float
    m4: float
    mean: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.m2 <= 0.0:
            raise ValueError(f"m2 must be positive, got {self.m2}")
        if self.m4 < self.m2 ** 2 / 3.0:
            raise ValueError(
                f"m4={self.m4} below the Cauchy-Schwarz floor m2^2/3="
                f"{self.m2 ** 2 / 3.0}"
            )


def m4_equilibrium(m2: float) -> float:
    """Fixed point (5/3) m2^2 of the gamma=0 fourth-moment dynamics."""
    return 5.0 / 3.0 * m2 ** 2


def maxwellian_m4_trajectory(m2: float, m4_0: float, t) -> np.ndarray | float:
    """m4(t) = m4* + (m4(0) - m4*) e^(-8t) with m4* = (5/3) m2^2.

    Valid for isotropic zero-mean data at gamma = 0; rejects nonphysical
    initial moments with m4_0 < m2^2 / 3.
    """
    state = IsotropicState(m2=m2, m4=m4_0)   # validates the moment pair
    eq = m4_equilibrium(state.m2)
    t_arr = np.asarray(t, dtype=np.float64)
    out = eq + (m4_0 - eq) * np.exp(-M4_RELAXATION_RATE * t_arr)
    return float(out) if np.isscalar(t) else out


def equilibrium_moments(energy: float, p: int) -> float:
    """E|v|^p of the centered isotropic Gaussian with E|v|^2 = energy:
    energy^(p/2) (p+1)!! / 3^(p/2); p must be even."""
    if p % 2 != 0 or p < 2:
        raise ValueError(f"p must be an even integer >= 2, got {p}")
    if energy < 0.0:
        raise ValueError(f"energy must be non-negative, got {energy}")
    double_fact = float(np.prod(np.arange(3.0, p + 2.0, 2.0)))
    return energy ** (p / 2) * double_fact / 3.0 ** (p / 2)


@dataclass
class SelfConvergenceTable:
    """W2 between pooled first-marginal samples of consecutive ensemble sizes."""

    n_small: np.ndarray
    n_large: np.ndarray
    t: float
    w2: np.ndarray
    stderr: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# kaclandau self-convergence table v1\n")
            fh.write("# columns: n_small,n_large,t,w2,stderr\n")
            for i in range(self.n_small.size):
                fh.write(f"{self.n_small[i]},{self.n_large[i]},{self.t:.17g},"
                         f"{self.w2[i]:.17g},{self.stderr[i]:.17g}\n")


def self_convergence_table(config_base, n_list, t_probe: float,
                           workers: int | None = None) -> SelfConvergenceTable:
    """Run the base configuration at each size in n_list and tabulate the W2
    distance between consecutive sizes' pooled samples at t_probe.

    The horizon is set to t_probe so the final snapshot is the probe time;
    stderr comes from replica-group splits.
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing with at least 2 entries")
    stacks = []
    for n in n_list:
        cfg = replace(config_base, n_particles=n, horizon=t_probe)
        result = simulate(cfg, workers=workers)
        stacks.append(result.velocities_at(result.snapshot_times[-1]))
    w2s, ses = [], []
    for small, large in zip(stacks, stacks[1:]):
        w2, se = w2_group_estimate(small, large)
        w2s.append(w2)
        ses.append(se)
    return SelfConvergenceTable(
        n_small=np.array(n_list[:-1]), n_large=np.array(n_list[1:]),
        t=t_probe, w2=np.array(w2s), stderr=np.array(ses),
    )
