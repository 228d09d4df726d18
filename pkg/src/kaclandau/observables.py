"""Statistical estimators over replica ensembles.

Polynomial and exponential moments with jackknife errors, a k-nearest-neighbor
differential entropy estimate, an across-replica estimator of the two-particle
covariance (the chaos diagnostic), and a Monte-Carlo residual of the weak-form
marginal hierarchy.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma, logsumexp

from .kernels import pair_a, pair_b

__all__ = [
    "ExpMomentSpec",
    "ExpMomentResult",
    "polynomial_moment",
    "exponential_moment",
    "knn_entropy",
    "chaos_covariance",
    "ConstantOne",
    "QuadraticEnergy",
    "GaussianBump",
    "bbgky_residual",
    "moment_growth_exponent",
    "fit_moment_constant",
    "MomentReport",
    "build_moment_report",
]

_LOG_MAX = 709.0            # exp overflow threshold for float64
CHAOS_STATISTICS = ("speed_sq", "component_x")
BBGKY_MODES = ("finite_N", "hierarchy_limit")


# ---------------------------------------------------------------------------
# moments

def _replica_values(samples: np.ndarray) -> list:
    """Normalize input to a list of per-replica 1-D |v|-style value groups."""
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim == 2 and s.shape[1] == 3:
        return [s]
    if s.ndim == 3 and s.shape[2] == 3:
        return list(s)
    raise ValueError(f"expected (k, 3) or (R, k, 3) velocities, got shape {s.shape}")


def _jackknife_mean(groups: list) -> tuple:
    """Mean over all values with leave-one-group-out jackknife stderr."""
    sums = np.array([g.sum() for g in groups])
    counts = np.array([g.size for g in groups], dtype=np.float64)
    total, n = sums.sum(), counts.sum()
    est = total / n
    r = len(groups)
    if r < 2:
        g = groups[0]
        se = float(g.std(ddof=1) / np.sqrt(g.size)) if g.size > 1 else 0.0
        return float(est), se
    loo = (total - sums) / (n - counts)
    se = np.sqrt((r - 1) / r * np.sum((loo - loo.mean()) ** 2))
    return float(est), float(se)


def polynomial_moment(samples, p: float) -> tuple:
    """Sample mean of |v|^p with stderr.

    samples: (k, 3) velocities, or (R, k, 3) replica-structured velocities in
    which case the stderr is the leave-one-replica-out jackknife.
    """
    if p < 0:
        raise ValueError(f"p must be non-negative, got {p}")
    groups = _replica_values(samples)
    if sum(g.shape[0] for g in groups) < 2:
        raise ValueError("need at least 2 samples")
    vals = [np.linalg.norm(g, axis=1) ** p for g in groups]
    return _jackknife_mean(vals)


@dataclass(frozen=True)
class ExpMomentSpec:
    """Exponential-moment observable exp(xi |v|^beta), beta = 4/(2+gamma)."""

    xi: float
    beta_exponent: float | None = None

    def __post_init__(self):
        if self.xi <= 0.0:
            raise ValueError(f"xi must be positive, got {self.xi}")
        if self.beta_exponent is not None and not (0.0 < self.beta_exponent <= 2.0):
            raise ValueError(f"beta_exponent out of range: {self.beta_exponent}")

    def beta(self, gamma: float) -> float:
        return self.beta_exponent if self.beta_exponent is not None \
            else 4.0 / (2.0 + gamma)


@dataclass(frozen=True)
class ExpMomentResult:
    estimate: float
    stderr: float
    log_estimate: float
    tail_flag: bool          # top 1% of samples carry >50% of the estimate
    overflowed: bool         # exponent overflow; trust log_estimate


def exponential_moment(samples, spec: ExpMomentSpec, gamma: float) -> ExpMomentResult:
    """Sample mean of exp(xi |v|^beta) with jackknife stderr over replicas.

    Exponent overflow switches the computation to log-space (log-sum-exp) and
    sets the overflowed flag; estimate is then exp(log_estimate) or inf.
    """
    groups = _replica_values(samples)
    beta = spec.beta(gamma)
    exps = [spec.xi * np.linalg.norm(g, axis=1) ** beta for g in groups]
    all_x = np.concatenate(exps)
    n = all_x.size
    if n < 1:
        raise ValueError("need at least 1 sample")

    overflow = bool(all_x.max(initial=0.0) > _LOG_MAX)
    log_est = float(logsumexp(all_x) - np.log(n))
    # Tail dominance: contribution share of the largest 1% of exponents.
    k_top = max(1, int(np.ceil(0.01 * n)))
    top = np.sort(all_x)[-k_top:]
    share = float(np.exp(logsumexp(top) - logsumexp(all_x)))
    tail = share > 0.5

    if not overflow:
        vals = [np.exp(x) for x in exps]
        est, se = _jackknife_mean(vals)
        return ExpMomentResult(est, se, log_est, tail, False)

    # Log-space jackknife: leave-one-replica-out log means.
    lse_r = np.array([logsumexp(x) for x in exps])
    cnt_r = np.array([x.size for x in exps], dtype=np.float64)
    lse_tot = logsumexp(lse_r)
    r = len(exps)
    if r < 2:
        se_log = 0.0
    else:
        with np.errstate(divide="ignore"):
            loo = lse_tot + np.log1p(-np.exp(lse_r - lse_tot)) - np.log(n - cnt_r)
        se_log = float(np.sqrt((r - 1) / r * np.sum((loo - loo.mean()) ** 2)))
    est = float(np.exp(log_est)) if log_est < _LOG_MAX else float("inf")
    se = est * se_log if np.isfinite(est) else float("inf")
    return ExpMomentResult(est, se, log_est, tail, True)


# ---------------------------------------------------------------------------
# entropy

def knn_entropy(samples, neighbor_k: int = 4) -> float:
    """Kozachenko-Leonenko differential entropy (nats) from 3-D samples.

    Duplicate points make the k-th neighbor distance vanish; they are jittered
    by 1e-12 with a warning.
    """
    pts = np.asarray(samples, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (k, 3) samples, got shape {pts.shape}")
    n = pts.shape[0]
    if not n > neighbor_k >= 1:
        raise ValueError(f"need n > neighbor_k >= 1, got n={n}, k={neighbor_k}")
    dist, _ = cKDTree(pts).query(pts, k=neighbor_k + 1)
    eps = dist[:, -1]
    if np.any(eps == 0.0):
        warnings.warn("duplicate points jittered by 1e-12 for entropy estimate")
        rng = np.random.default_rng(0)
        pts = pts + 1e-12 * rng.standard_normal(pts.shape)
        dist, _ = cKDTree(pts).query(pts, k=neighbor_k + 1)
        eps = dist[:, -1]
    log_ball = np.log(4.0 * np.pi / 3.0)
    return float(digamma(n) - digamma(neighbor_k) + log_ball + 3.0 * np.mean(np.log(eps)))


# ---------------------------------------------------------------------------
# chaos covariance

def _statistic_values(replicas_at_t: np.ndarray, statistic: str) -> np.ndarray:
    v = np.asarray(replicas_at_t, dtype=np.float64)
    if v.ndim != 3 or v.shape[2] != 3:
        raise ValueError(f"expected (R, N, 3) replica stack, got shape {v.shape}")
    if statistic == "speed_sq":
        return np.sum(v * v, axis=2)
    if statistic == "component_x":
        return v[:, :, 0]
    raise ValueError(f"unknown statistic {statistic!r}; choose from {CHAOS_STATISTICS}")


def _anova_cov(phi: np.ndarray) -> float:
    # Exchangeability gives E[within-replica sample variance] = Var - Cov and
    # Var(within mean) = Var/N + (1-1/N) Cov, so the difference below is an
    # unbiased estimate of Cov(phi(V^1), phi(V^2)).
    n = phi.shape[1]
    within_mean = phi.mean(axis=1)
    within_var = phi.var(axis=1, ddof=1)
    return float(within_mean.var(ddof=1) - within_var.mean() / n)


def chaos_covariance(replicas_at_t, statistic: str = "speed_sq") -> tuple:
    """Across-replica estimate of Cov(phi(V^1), phi(V^2)) with jackknife stderr.

    Needs >= 8 replicas; phi is |v|^2 ('speed_sq') or v_x ('component_x').
    """
    phi = _statistic_values(replicas_at_t, statistic)
    r = phi.shape[0]
    if r < 8:
        raise ValueError(f"need at least 8 replicas, got {r}")
    est = _anova_cov(phi)
    loo = np.array([_anova_cov(np.delete(phi, i, axis=0)) for i in range(r)])
    se = float(np.sqrt((r - 1) / r * np.sum((loo - loo.mean()) ** 2)))
    return est, se


# ---------------------------------------------------------------------------
# weak-form hierarchy residual

class ConstantOne:
    """phi = 1; every derivative vanishes."""

    def value(self, vm: np.ndarray) -> np.ndarray:
        return np.ones(vm.shape[:-2])

    def grad(self, vm: np.ndarray) -> np.ndarray:
        return np.zeros_like(vm)

    def hess(self, vm: np.ndarray, i: int, j: int) -> np.ndarray:
        return np.zeros(vm.shape[:-2] + (3, 3))


class QuadraticEnergy:
    """phi = sum_i |v^i|^2 (not bounded; used for conservation checks)."""

    def value(self, vm: np.ndarray) -> np.ndarray:
        return np.sum(vm * vm, axis=(-2, -1))

    def grad(self, vm: np.ndarray) -> np.ndarray:
        return 2.0 * vm

    def hess(self, vm: np.ndarray, i: int, j: int) -> np.ndarray:
        h = np.zeros(vm.shape[:-2] + (3, 3))
        if i == j:
            h[...] = 2.0 * np.eye(3)
        return h


class GaussianBump:
    """phi(V_m) = prod_i exp(-|v^i - c_i|^2 / w_i^2), analytic derivatives."""

    def __init__(self, centers, widths):
        self.centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        w = np.asarray(widths, dtype=np.float64)
        self.widths = np.broadcast_to(np.atleast_1d(w), (self.centers.shape[0],)).copy()
        if self.centers.shape[1] != 3:
            raise ValueError("centers must be (m, 3)")
        if np.any(self.widths <= 0.0):
            raise ValueError("widths must be positive")

    def value(self, vm: np.ndarray) -> np.ndarray:
        d = vm - self.centers
        return np.exp(-np.sum(d * d / self.widths[:, None] ** 2, axis=(-2, -1)))

    def _slope(self, vm: np.ndarray, i: int) -> np.ndarray:
        # grad of log phi in slot i
        return -2.0 * (vm[..., i, :] - self.centers[i]) / self.widths[i] ** 2

    def grad(self, vm: np.ndarray) -> np.ndarray:
        val = self.value(vm)
        s = -2.0 * (vm - self.centers) / self.widths[:, None] ** 2
        return val[..., None, None] * s

    def hess(self, vm: np.ndarray, i: int, j: int) -> np.ndarray:
        val = self.value(vm)
        si = self._slope(vm, i)
        sj = self._slope(vm, j)
        h = si[..., :, None] * sj[..., None, :]
        if i == j:
            h = h - (2.0 / self.widths[i] ** 2) * np.eye(3)
        return val[..., None, None] * h


def _window_indices(n: int, m: int) -> np.ndarray:
    # Disjoint index windows of size m+1 (m test slots plus one coupling slot);
    # exchangeability makes each window an identically distributed draw.
    if m == n:
        return np.arange(n)[None, :]
    width = m + 1
    w = n // width
    return (np.arange(w)[:, None] * width) + np.arange(width)[None, :]


def _eval_fault(fn_name, exc, point):
    raise RuntimeError(
        f"test function failed in {fn_name} at point {np.asarray(point).tolist()}"
    ) from exc


def _generator_terms(vm_full: np.ndarray, m: int, test_fn, gamma: float,
                     n: int, mode: str) -> float:
    """Window-averaged weak-form integrand at one snapshot.

    vm_full: (W, width) window velocities, width = m (+1 when coupling active).
    """
    vm = vm_full[:, :m, :]
    try:
        grad = test_fn.grad(vm)
    except Exception as exc:     # noqa: BLE001 - contract: name the point
        _eval_fault("grad", exc, vm_full[0, :m])
    total = 0.0

    if mode == "finite_N" and m >= 2:
        for i in range(m):
            for j in range(m):
                if i == j:
                    continue
                z = vm[:, i, :] - vm[:, j, :]
                a = pair_a(z, gamma)
                b = pair_b(z, gamma)
                try:
                    h_ii = test_fn.hess(vm, i, i)
                    h_ij = test_fn.hess(vm, i, j)
                except Exception as exc:   # noqa: BLE001
                    _eval_fault("hess", exc, vm_full[0, :m])
                term_a = np.einsum("wab,wab->w", a, h_ii - h_ij)
                term_b = np.einsum("wa,wa->w", b, grad[:, i, :] - grad[:, j, :])
                total += float(np.mean(term_a + term_b)) / n

    if m < vm_full.shape[1]:     # coupling to the extra slot
        v_next = vm_full[:, m, :]
        coeff_a = (n - m) / n if mode == "finite_N" else 1.0
        coeff_b = 2.0 * (n - m) / n if mode == "finite_N" else 2.0
        for i in range(m):
            z = vm[:, i, :] - v_next
            a = pair_a(z, gamma)
            b = pair_b(z, gamma)
            try:
                h_ii = test_fn.hess(vm, i, i)
            except Exception as exc:   # noqa: BLE001
                _eval_fault("hess", exc, vm_full[0, :m])
            total += coeff_a * float(np.mean(np.einsum("wab,wab->w", a, h_ii)))
            total += coeff_b * float(np.mean(np.einsum("wa,wa->w", b, grad[:, i, :])))
    return total


def bbgky_residual(trajectories, m: int, test_fn, T: float,
                   mode: str = "finite_N", gamma: float | None = None) -> tuple:
    """Monte-Carlo residual (LHS - RHS) of the weak m-marginal evolution.

    LHS is the change of E[phi] between t=0 and T; RHS the time integral
    (trapezoid on logged snapshot times) of the empirical generator terms.
    finite_N keeps the 1/N pair terms and (N-m)/N coupling factors;
    hierarchy_limit drops the pair terms and sets the factors to 1.
    Expectations pool disjoint exchangeable index windows within replicas;
    returns (residual mean over replicas, stderr).
    """
    if mode not in BBGKY_MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {BBGKY_MODES}")
    logs = trajectories.logs if hasattr(trajectories, "logs") else list(trajectories)
    residuals = []
    for log in logs:
        times = log.snapshot_times
        k_end = int(np.argmin(np.abs(times - T)))
        if abs(times[k_end] - T) > 1e-9:
            raise ValueError(
                f"T={T} is not a logged snapshot time; run with snapshot_stride=1 "
                f"(nearest logged: {times[k_end]})"
            )
        if gamma is None:
            gamma = log.manifest.get("config", {}).get("gamma")
        if gamma is None:
            raise ValueError("gamma not found in trajectory manifest; pass gamma=")
        n = log.snapshots[0].shape[0]
        if not 1 <= m <= n:
            raise ValueError(f"m={m} outside 1..{n}")
        win = _window_indices(n, m)
        sel = [log.snapshots[k][win] for k in range(k_end + 1)]
        vm0, vmT = sel[0][:, :m, :], sel[k_end][:, :m, :]
        try:
            lhs = float(np.mean(test_fn.value(vmT)) - np.mean(test_fn.value(vm0)))
        except Exception as exc:   # noqa: BLE001
            _eval_fault("value", exc, sel[0][0, :m])
        integrand = np.array(
            [_generator_terms(sel[k], m, test_fn, gamma, n, mode)
             for k in range(k_end + 1)]
        )
        rhs = float(np.trapezoid(integrand, times[: k_end + 1]))
        residuals.append(lhs - rhs)
    res = np.array(residuals)
    se = float(res.std(ddof=1) / np.sqrt(res.size)) if res.size > 1 else 0.0
    return float(res.mean()), se


# ---------------------------------------------------------------------------
# moment scaling fits

def moment_growth_exponent(p_values, moments) -> float:
    """Least-squares slope of log(m_p^(1/p)) against log p."""
    p = np.asarray(p_values, dtype=np.float64)
    m = np.asarray(moments, dtype=np.float64)
    if p.size < 4:
        raise ValueError(f"need at least 4 points, got {p.size}")
    if np.any(m <= 0.0):
        raise ValueError("moments must be positive")
    x = np.log(p)
    y = np.log(m) / p
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def fit_moment_constant(p_values, sup_moments, gamma: float) -> float:
    """Smallest C with sup_t m_p <= C^p p^((2+gamma)(p-2)/4) for all given p."""
    p = np.asarray(p_values, dtype=np.float64)
    m = np.asarray(sup_moments, dtype=np.float64)
    if np.any(m <= 0.0):
        raise ValueError("moments must be positive")
    log_c = (np.log(m) - (2.0 + gamma) * (p - 2.0) / 4.0 * np.log(p)) / p
    return float(np.exp(log_c.max()))


# ---------------------------------------------------------------------------
# report plumbing

@dataclass
class MomentReport:
    """Moment/entropy/chaos time series for one simulation result."""

    times: np.ndarray
    p_values: tuple
    moment_mean: np.ndarray        # (P, K)
    moment_stderr: np.ndarray      # (P, K)
    exp_specs: tuple = ()
    exp_estimate: np.ndarray | None = None   # (X, K)
    exp_stderr: np.ndarray | None = None
    exp_tail: np.ndarray | None = None       # (X, K) bool
    entropy: np.ndarray | None = None        # (K,)
    chaos_cov: np.ndarray | None = None      # (K,)
    chaos_stderr: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def write_moments_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# kaclandau moment report v1\n")
            fh.write("# columns: time,p,moment,stderr\n")
            for kp, p in enumerate(self.p_values):
                for kt, t in enumerate(self.times):
                    fh.write(f"{t:.17g},{p:.17g},{self.moment_mean[kp, kt]:.17g},"
                             f"{self.moment_stderr[kp, kt]:.17g}\n")

    def write_exp_csv(self, path) -> None:
        if self.exp_estimate is None:
            raise ValueError("report has no exponential-moment series")
        with open(path, "w") as fh:
            fh.write("# kaclandau exponential moment report v1\n")
            fh.write("# columns: time,xi,estimate,stderr,tail_flag\n")
            for kx, spec in enumerate(self.exp_specs):
                for kt, t in enumerate(self.times):
                    fh.write(f"{t:.17g},{spec.xi:.17g},"
                             f"{self.exp_estimate[kx, kt]:.17g},"
                             f"{self.exp_stderr[kx, kt]:.17g},"
                             f"{int(self.exp_tail[kx, kt])}\n")


def build_moment_report(result, p_values=(2.0, 4.0, 6.0), exp_specs=(),
                        entropy: bool = False, chaos_statistic: str | None = None,
                        neighbor_k: int = 4, entropy_cap: int = 20000) -> MomentReport:
    """Evaluate the requested estimators at every snapshot time.

    Moment estimates pool all particles within each replica (exchangeability)
    and jackknife over replicas.
    """
    gamma = result.config.gamma
    times = result.snapshot_times
    k = times.size
    p_values = tuple(float(p) for p in p_values)
    exp_specs = tuple(exp_specs)
    mom = np.zeros((len(p_values), k))
    mse = np.zeros_like(mom)
    ee = np.zeros((len(exp_specs), k)) if exp_specs else None
    es = np.zeros_like(ee) if exp_specs else None
    et = np.zeros((len(exp_specs), k), dtype=bool) if exp_specs else None
    ent = np.zeros(k) if entropy else None
    cc = np.zeros(k) if chaos_statistic else None
    cs = np.zeros(k) if chaos_statistic else None

    for kt, t in enumerate(times):
        stack = result.velocities_at(t)      # (R, N, 3)
        for kp, p in enumerate(p_values):
            mom[kp, kt], mse[kp, kt] = polynomial_moment(stack, p)
        for kx, spec in enumerate(exp_specs):
            r = exponential_moment(stack, spec, gamma)
            ee[kx, kt], es[kx, kt], et[kx, kt] = r.estimate, r.stderr, r.tail_flag
        if entropy:
            pooled = stack.reshape(-1, 3)
            if pooled.shape[0] > entropy_cap:
                pooled = pooled[:: pooled.shape[0] // entropy_cap + 1]
            ent[kt] = knn_entropy(pooled, neighbor_k=neighbor_k)
        if chaos_statistic:
            cc[kt], cs[kt] = chaos_covariance(stack, chaos_statistic)
    return MomentReport(times=times, p_values=p_values, moment_mean=mom,
                        moment_stderr=mse, exp_specs=exp_specs, exp_estimate=ee,
                        exp_stderr=es, exp_tail=et, entropy=ent,
                        chaos_cov=cc, chaos_stderr=cs)
