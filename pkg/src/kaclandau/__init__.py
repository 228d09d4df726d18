"""Conservative Kac-particle simulator and verification lab for the
space-homogeneous Landau equation with hard potentials (gamma in [0, 1]).

Layout:

- ``kernels``       pair interaction kernels and Povzner-type identities
- ``noise``         counter-based antisymmetric pair noise
- ``ensemble``      particle states, initial laws, snapshot files
- ``integrator``    conservative Euler-Maruyama stepping and sweeps
- ``coupling``      synchronous coupling of two particle families
- ``transport``     empirical Wasserstein-2 distances
- ``observables``   moments, entropy, chaos covariance, hierarchy residuals
- ``inequalities``  moment ODE comparisons and hierarchy-weight bounds
- ``oracle``        closed-form references (isotropic fourth moment, Gaussian
                    moments, self-convergence tables)
- ``harness``       config files, run directories, manifests, resume
- ``verification``  acceptance criteria behind ``kaclandau verify``
"""

from ._version import __version__
from .kernels import (
    PairKernelValue,
    eval_pair_kernels,
    kernel_modulus_ratio,
    pair_a,
    pair_b,
    pair_sigma,
    povzner_gap,
    povzner_sides,
)
from .noise import PairNoise, derive_key, pair_rank
from .ensemble import (
    Ensemble,
    InitialSpec,
    SeedLineage,
    conserved_quantities,
    load_snapshot,
    sample_initial,
    save_snapshot,
)
from .integrator import (
    SimulationResult,
    StepOptions,
    StepRejected,
    TrajectoryLog,
    project_conservation,
    resolve_workers,
    simulate,
    simulate_replica,
    step,
)
from .coupling import (
    CoupledPair,
    CouplingReport,
    coupled_simulate,
    optimal_pairing,
    u_statistic,
)
from .transport import (
    EmpiricalCloud,
    subsample_cloud,
    w2_exact,
    w2_group_estimate,
    w2_sliced,
)
from .observables import (
    ExpMomentResult,
    ExpMomentSpec,
    GaussianBump,
    MomentReport,
    QuadraticEnergy,
    bbgky_residual,
    build_moment_report,
    chaos_covariance,
    exponential_moment,
    fit_moment_constant,
    knn_entropy,
    moment_growth_exponent,
    polynomial_moment,
)
from .inequalities import (
    HierarchyParams,
    MomentOdeParams,
    OdeTrajectory,
    exp_series_partial_sums,
    exp_series_threshold,
    f_sum_bound,
    f_tail_bound,
    g_sum_bound,
    gronwall_step,
    hierarchy_weights,
    moment_ode_bound,
    moment_ode_solve,
    polynomial_moment_bound,
    regime_split_time,
    stability_cutoff,
    stability_rhs,
    u_recursion_bound,
)
from .oracle import (
    IsotropicState,
    SelfConvergenceTable,
    equilibrium_moments,
    m4_equilibrium,
    maxwellian_m4_trajectory,
    self_convergence_table,
)
from .harness import (
    RunManifest,
    SimConfig,
    parse_config,
    report_summary,
    resume,
    run,
    verify,
    write_config,
)

__all__ = [
    "__version__",
    # kernels
    "PairKernelValue", "eval_pair_kernels", "kernel_modulus_ratio",
    "pair_a", "pair_b", "pair_sigma", "povzner_gap", "povzner_sides",
    # noise
    "PairNoise", "derive_key", "pair_rank",
    # ensemble
    "Ensemble", "InitialSpec", "SeedLineage", "conserved_quantities",
    "load_snapshot", "sample_initial", "save_snapshot",
    # integrator
    "SimulationResult", "StepOptions", "StepRejected", "TrajectoryLog",
    "project_conservation", "resolve_workers", "simulate",
    "simulate_replica", "step",
    # coupling
    "CoupledPair", "CouplingReport", "coupled_simulate", "optimal_pairing",
    "u_statistic",
    # transport
    "EmpiricalCloud", "subsample_cloud", "w2_exact", "w2_group_estimate",
    "w2_sliced",
    # observables
    "ExpMomentResult", "ExpMomentSpec", "GaussianBump", "MomentReport",
    "QuadraticEnergy", "bbgky_residual", "build_moment_report",
    "chaos_covariance", "exponential_moment", "fit_moment_constant",
    "knn_entropy", "moment_growth_exponent", "polynomial_moment",
    # inequalities
    "HierarchyParams", "MomentOdeParams", "OdeTrajectory",
    "exp_series_partial_sums", "exp_series_threshold", "f_sum_bound",
    "f_tail_bound", "g_sum_bound", "gronwall_step", "hierarchy_weights",
    "moment_ode_bound", "moment_ode_solve", "polynomial_moment_bound",
    "regime_split_time", "stability_cutoff", "stability_rhs",
    "u_recursion_bound",
    # oracle
    "IsotropicState", "SelfConvergenceTable", "equilibrium_moments",
    "m4_equilibrium", "maxwellian_m4_trajectory", "self_convergence_table",
    # harness
    "RunManifest", "SimConfig", "parse_config", "report_summary", "resume",
    "run", "verify", "write_config",
]
