"""Closed-form bounds and small ODE systems used by the moment analysis.

Covers the scalar moment ODE and its comparison bound, the small/large-time
regime split, the polynomial-moment envelope and the exponential-series
threshold derived from it, the F/G ladder weights of the hierarchy recursion,
the one-level Gronwall evaluator, the recursion-closure bound for the coupled
L2 distance, and the stability right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.linalg import expm
from scipy.special import gammaln

__all__ = [
    "MomentOdeParams",
    "OdeTrajectory",
    "HierarchyParams",
    "moment_ode_solve",
    "moment_ode_bound",
    "moment_ode_bound_log",
    "regime_split_time",
    "polynomial_moment_bound",
    "polynomial_moment_bound_log",
    "exp_series_threshold",
    "exp_series_partial_sums",
    "hierarchy_weights",
    "f_tail_bound",
    "f_sum_bound",
    "g_sum_bound",
    "gronwall_step",
    "u_recursion_bound",
    "stability_rhs",
    "stability_cutoff",
]

BLOWUP_THRESHOLD = 1e300
_LOG_MAX = 709.0


@dataclass(frozen=True)
class MomentOdeParams:
    """Coefficients of dh/dt = -a h^(1+alpha) + b h + c h^(1-beta)."""

    a: float
    b: float
    c: float
    alpha: float
    beta: float
    p: float | None = None
    gamma: float | None = None
    r0: float | None = None

    def __post_init__(self):
        if self.a < 0 or self.b < 0 or self.c < 0:
            raise ValueError("coefficients a, b, c must be non-negative")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("exponents alpha, beta must be non-negative")

    @classmethod
    def from_moment_system(cls, p: float, gamma: float, r0: float = 1.0):
        """Coefficients induced by the p-th moment of the pair dynamics with
        initial support radius r0: a=p, b=2p r0^gamma, c=2 r0^2 p^(2+gamma/2),
        alpha=gamma/(p-2), beta=(2-gamma)/(p-2); requires p > 4-gamma."""
        if not 0.0 < gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {gamma}")
        if p <= 4.0 - gamma:
            raise ValueError(f"p must exceed 4-gamma={4.0 - gamma}, got {p}")
        if r0 <= 0.0:
            raise ValueError(f"r0 must be positive, got {r0}")
        return cls(
            a=p,
            b=2.0 * p * r0 ** gamma,
            c=2.0 * r0 ** 2 * p ** (2.0 + gamma / 2.0),
            alpha=gamma / (p - 2.0),
            beta=(2.0 - gamma) / (p - 2.0),
            p=p, gamma=gamma, r0=r0,
        )


@dataclass(frozen=True)
class OdeTrajectory:
    times: np.ndarray
    h: np.ndarray
    blew_up: bool = False
    blowup_time: float | None = None


def moment_ode_solve(params: MomentOdeParams, h0: float, t_grid) -> OdeTrajectory:
    """Integrate the equality version of the moment ODE on the given grid.

    Adaptive explicit RK with relative tolerance 1e-8; trajectories crossing
    1e300 are flagged with the blow-up time and padded with inf.
    """
    t = np.asarray(t_grid, dtype=np.float64)
    if h0 <= 0.0:
        raise ValueError(f"h0 must be positive, got {h0}")
    if t.ndim != 1 or t.size < 1 or np.any(np.diff(t) <= 0.0):
        raise ValueError("t_grid must be 1-D strictly increasing")
    a, b, c = params.a, params.b, params.c
    alpha, beta = params.alpha, params.beta

    def rhs(_t, y):
        h = max(y[0], 1e-300)
        return [-a * h ** (1.0 + alpha) + b * h + c * h ** (1.0 - beta)]

    def blowup(_t, y):
        return y[0] - BLOWUP_THRESHOLD

    blowup.terminal = True
    blowup.direction = 1.0
    if t.size == 1:
        return OdeTrajectory(times=t, h=np.array([h0]))
    sol = solve_ivp(rhs, (t[0], t[-1]), [h0], method="RK45", rtol=1e-8,
                    atol=1e-12, t_eval=t, events=blowup)
    if not sol.success and sol.status != 1:
        raise RuntimeError(f"moment ODE solver failed: {sol.message}")
    h = np.full(t.size, np.inf)
    h[: sol.y.shape[1]] = sol.y[0]
    blew = sol.status == 1
    t_blow = float(sol.t_events[0][0]) if blew and sol.t_events[0].size else None
    return OdeTrajectory(times=t, h=h, blew_up=blew, blowup_time=t_blow)


def moment_ode_bound_log(params: MomentOdeParams, t: float) -> float:
    """log of the comparison bound; safe for tiny alpha (huge powers)."""
    if t <= 0.0:
        raise ValueError(f"bound requires t > 0, got {t}")
    a, b, c = params.a, params.b, params.c
    alpha, beta = params.alpha, params.beta
    if a <= 0.0 or alpha <= 0.0:
        raise ValueError("comparison bound needs a > 0 and alpha > 0")
    terms = [np.log(2.0 / (a * alpha * t)) / alpha]
    if b > 0.0:
        terms.append(np.log(4.0 * b / a) / alpha)
    if c > 0.0:
        terms.append(np.log(4.0 * c / a) / (alpha + beta))
    return float(np.logaddexp.reduce(terms)) if len(terms) > 1 else float(terms[0])


def moment_ode_bound(params: MomentOdeParams, t: float) -> float:
    """(2/(a alpha t))^(1/alpha) + (4b/a)^(1/alpha) + (4c/a)^(1/(alpha+beta)).

    Every trajectory of the moment ODE sits below this for all t > 0,
    regardless of h0 (comparison principle).
    """
    log_val = moment_ode_bound_log(params, t)
    return float(np.exp(log_val)) if log_val < _LOG_MAX else float("inf")


def regime_split_time(p: float, gamma: float) -> float:
    """Boundary p^(-gamma(2+gamma)/4) between the small-time and
    comparison-bound regimes."""
    return float(p ** (-gamma * (2.0 + gamma) / 4.0))


def polynomial_moment_bound_log(p: float, gamma: float, c_const: float) -> float:
    if p < 0.0:
        raise ValueError(f"p must be non-negative, got {p}")
    if c_const < 0.0:
        raise ValueError(f"c_const must be non-negative, got {c_const}")
    if c_const == 0.0:
        return float("-inf")
    return float(p * np.log(c_const) + (2.0 + gamma) * (p - 2.0) / 4.0 * np.log(p))


def polynomial_moment_bound(p: float, gamma: float, c_const: float) -> float:
    """Envelope c^p p^((2+gamma)(p-2)/4) for the uniform-in-time p-moment."""
    log_val = polynomial_moment_bound_log(p, gamma, c_const)
    if log_val == float("-inf"):
        return 0.0
    return float(np.exp(log_val)) if log_val < _LOG_MAX else float("inf")


def exp_series_threshold(c_const: float, gamma: float) -> float:
    """Radius xi* = (2+gamma)/(4e c^(4/(2+gamma))) below which the
    exponential-moment Taylor series converges under the moment envelope."""
    if c_const <= 0.0:
        raise ValueError(f"c_const must be positive, got {c_const}")
    return float((2.0 + gamma) / (4.0 * np.e * c_const ** (4.0 / (2.0 + gamma))))


def exp_series_partial_sums(xi: float, c_const: float, gamma: float,
                            n_terms: int = 200, log_moments=None) -> np.ndarray:
    """Partial sums S_K = sum_{n<=K} xi^n m_{p_n} / n! with p_n = 4n/(2+gamma).

    log_moments optionally supplies log m_{p_n} for n = 0..n_terms; the default
    saturates the polynomial envelope with the given c_const.  Terms accumulate
    in log-space; the returned sums may be inf for strongly divergent xi.
    """
    if xi <= 0.0:
        raise ValueError(f"xi must be positive, got {xi}")
    n = np.arange(n_terms + 1)
    if log_moments is None:
        p_n = 4.0 * n / (2.0 + gamma)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_m = p_n * np.log(c_const) \
                + (2.0 + gamma) * (p_n - 2.0) / 4.0 * np.log(np.maximum(p_n, 1e-300))
        log_m[0] = 0.0                        # m_0 is the total mass
    else:
        log_m = np.asarray(log_moments, dtype=np.float64)
        if log_m.shape != (n_terms + 1,):
            raise ValueError(
                f"log_moments must have shape ({n_terms + 1},), got {log_m.shape}"
            )
    log_terms = n * np.log(xi) + log_m - gammaln(n + 1.0)
    log_sums = np.logaddexp.accumulate(log_terms)
    with np.errstate(over="ignore"):
        return np.exp(log_sums)


# ---------------------------------------------------------------------------
# F/G ladder

def _ladder_generator(m: int, ell: int, a: float) -> np.ndarray:
    k = np.arange(m, ell + 1, dtype=np.float64)
    size = k.size
    gen = np.zeros((size, size))
    gen[np.arange(size), np.arange(size)] = -a * k
    gen[np.arange(size - 1), np.arange(1, size)] = a * k[:-1]
    return gen


def hierarchy_weights(m: int, ell: int, a: float, t: float) -> tuple:
    """Ladder weights (F_m^ell(t), G_m^ell(t)).

    Both satisfy d/dt X_k = a k (X_{k+1} - X_k) for the states k = m..ell;
    F closes with the constant source F_{ell+1} = 1 and starts at 0, G closes
    with no source, starting from G_ell(0) = 1 (so G_ell(t) = e^(-a ell t)).
    Evaluated via the exponential of the bidiagonal generator.
    """
    if not 1 <= m <= ell:
        raise ValueError(f"need 1 <= m <= ell, got m={m}, ell={ell}")
    if a <= 0.0:
        raise ValueError(f"a must be positive, got {a}")
    if t < 0.0:
        raise ValueError(f"t must be non-negative, got {t}")
    size = ell - m + 1
    gen = _ladder_generator(m, ell, a)

    aug = np.zeros((size + 1, size + 1))
    aug[:size, :size] = gen
    aug[size - 1, size] = a * ell            # source from the constant state
    state0 = np.zeros(size + 1)
    state0[size] = 1.0
    f_val = float((expm(aug * t) @ state0)[0])

    g_state0 = np.zeros(size)
    g_state0[size - 1] = 1.0
    g_val = float((expm(gen * t) @ g_state0)[0])
    return f_val, g_val


def f_tail_bound(m: int, n: int, a: float, t: float) -> float:
    """Upper bound exp(-2n (e^(-at) - m/n)_+^2) for F_m^(n-1)(t)."""
    gap = max(np.exp(-a * t) - m / n, 0.0)
    return float(np.exp(-2.0 * n * gap ** 2))


def f_sum_bound(m: int, a: float, t: float) -> float:
    """Upper bound m(e^(at) - 1) for sum_ell F_m^ell(t)."""
    return float(m * (np.exp(a * t) - 1.0))


def g_sum_bound(m: int, a: float, t: float) -> float:
    """Upper bound m a e^(at) for sum_ell ell G_m^ell(t); requires a >= 1
    (the exact full sum is m e^(at))."""
    return float(m * a * np.exp(a * t))


# ---------------------------------------------------------------------------
# hierarchy recursion pieces

def gronwall_step(u_next, m: int, a: float, t: float, u_m0: float,
                  c1: float = 1.0, c2: float = 1.0, gamma: float = 1.0) -> float:
    """One level of the distance recursion:

    e^(-a(m-1)t) u_m(0) + int_0^t e^(-a(m-1)(t-s))
        (c2 m t / exp(c1 a^(4/(gamma^2+2 gamma))) + a m u_next(s)) ds

    with u_next a callable profile for the (m+1)-level distance.
    """
    if t < 0.0:
        raise ValueError(f"t must be non-negative, got {t}")
    rate = a * (m - 1)
    cutoff_term = c2 * m * t / np.exp(c1 * a ** (4.0 / (gamma ** 2 + 2.0 * gamma)))

    def integrand(s):
        return np.exp(-rate * (t - s)) * (cutoff_term + a * m * u_next(s))

    integral, _ = quad(integrand, 0.0, t, epsabs=1e-12, epsrel=1e-12, limit=200)
    return float(np.exp(-rate * t) * u_m0 + integral)


@dataclass(frozen=True)
class HierarchyParams:
    """Inputs of the recursion-closure bound for the coupled L2 distance."""

    a_cutoff: float
    m: int
    n: int
    T: float
    u0: float
    c1: float = 1.0
    c2: float = 1.0
    c4: float = 1.0
    eta: float = 0.1
    gamma: float = 1.0

    def __post_init__(self):
        if self.a_cutoff <= 0.0:
            raise ValueError(f"a_cutoff must be positive, got {self.a_cutoff}")
        if not 1 <= self.m <= self.n:
            raise ValueError(f"need 1 <= m <= n, got m={self.m}, n={self.n}")
        if self.T < 0.0 or self.u0 < 0.0:
            raise ValueError("T and u0 must be non-negative")
        if min(self.c1, self.c2, self.c4) <= 0.0:
            raise ValueError("constants c1, c2, c4 must be positive")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")


def u_recursion_bound(params: HierarchyParams) -> float:
    """Closed bound u0 m a e^(2aT) + c2 T e^(2aT) m / (a e^(c1 a^kappa))
    + c4 e^(5aT)/n with kappa = 4/(gamma^2+2 gamma); valid for n >= 2m e^(aT)."""
    a, m, n, t = params.a_cutoff, params.m, params.n, params.T
    required = 2.0 * m * np.exp(a * t)
    if n < required:
        raise ValueError(
            f"validity region violated: need n >= 2 m exp(aT) = {required:.6g}, "
            f"got n = {n}"
        )
    kappa = 4.0 / (params.gamma ** 2 + 2.0 * params.gamma)
    term1 = params.u0 * m * a * np.exp(2.0 * a * t)
    term2 = params.c2 * t * np.exp(2.0 * a * t) * m / (a * np.exp(params.c1 * a ** kappa))
    term3 = params.c4 * np.exp(5.0 * a * t) / n
    return float(term1 + term2 + term3)


def stability_rhs(m: int, T: float, u0: float, eta: float, c_const: float) -> float:
    """Stability envelope c sqrt(m(1+T)) (sqrt(u0))^(1-eta) for the W2
    distance of m-marginals started at squared distance u0."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    if u0 < 0.0:
        raise ValueError(f"u0 must be non-negative, got {u0}")
    if m < 1 or T < 0.0:
        raise ValueError("need m >= 1 and T >= 0")
    return float(c_const * np.sqrt(m * (1.0 + T)) * np.sqrt(u0) ** (1.0 - eta))


def stability_cutoff(u0: float, c1: float, gamma: float) -> float:
    """Cut-off a = ((1/c1) log(1 + 1/u0))^((gamma^2+2 gamma)/4) entering the
    stability proof; grows as the initial distance shrinks."""
    if u0 <= 0.0:
        raise ValueError(f"u0 must be positive, got {u0}")
    if c1 <= 0.0 or not 0.0 < gamma <= 1.0:
        raise ValueError("need c1 > 0 and gamma in (0, 1]")
    expo = (gamma ** 2 + 2.0 * gamma) / 4.0
    return float((np.log1p(1.0 / u0) / c1) ** expo)
