"""Configuration, run persistence, and the verification driver.

Configs are flat key = value text with units spelled in key names
(dt_time, horizon_time, r0_velocity); runs land in timestamped directories
with a JSON manifest listing every output file and its SHA-256, so identical
(config, seed) reruns are checkable byte for byte.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from .ensemble import (
    Ensemble,
    InitialSpec,
    SeedLineage,
    load_snapshot,
    save_snapshot,
)
from .integrator import SimulationResult, simulate, simulate_replica
from .observables import ExpMomentSpec, build_moment_report

__all__ = [
    "SimConfig",
    "RunManifest",
    "parse_config",
    "parse_config_text",
    "run",
    "resume",
    "verify",
    "report_summary",
]

_INITIAL_KINDS = ("uniform_ball", "two_ball_mixture", "point_cloud_file")
_OBSERVABLE_NAMES = ("moments", "exp_moment", "entropy", "chaos")
_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False,
               "yes": True, "no": False}


def _parse_bool(text: str) -> bool:
    try:
        return _BOOL_WORDS[text.strip().lower()]
    except KeyError:
        raise ValueError(f"expected a boolean (true/false), got {text!r}") from None


def _parse_floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


@dataclass(frozen=True)
class SimConfig:
    """One simulation campaign: physics, discretization, and requested output."""

    gamma: float
    n_particles: int
    r0: float = 1.0
    dt: float = 0.01
    horizon: float = 1.0
    replicas: int = 1
    seed: int = 0
    snapshot_stride: int = 1
    energy_projection: bool = False
    dt_adaptive_cap: float = 0.5
    initial_kind: str = "uniform_ball"
    initial_offset: tuple = (0.0, 0.0, 0.0)
    initial_mixture_weight: float = 1.0
    initial_path: str | None = None
    observables: tuple = ("moments",)
    moment_p_values: tuple = (2.0, 4.0, 6.0)
    exp_xi: float | None = None
    chaos_statistic: str | None = None
    entropy_neighbor_k: int = 4

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.n_particles < 2:
            raise ValueError(f"n_particles must be >= 2, got {self.n_particles}")
        if self.r0 <= 0.0:
            raise ValueError(f"r0 must be positive, got {self.r0}")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.horizon <= 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.replicas < 1:
            raise ValueError(f"replicas must be >= 1, got {self.replicas}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        if self.dt_adaptive_cap <= 0.0:
            raise ValueError(f"dt_adaptive_cap must be positive, got {self.dt_adaptive_cap}")
        if self.initial_kind not in _INITIAL_KINDS:
            raise ValueError(
                f"initial_kind must be one of {_INITIAL_KINDS}, got {self.initial_kind!r}"
            )
        for name in self.observables:
            if name not in _OBSERVABLE_NAMES:
                raise ValueError(
                    f"unknown observable {name!r}; allowed: {_OBSERVABLE_NAMES}"
                )
        steps = self.horizon / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ValueError(
                f"horizon {self.horizon} is not an integer multiple of dt {self.dt}"
            )

    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def initial_spec(self) -> InitialSpec:
        return InitialSpec(kind=self.initial_kind, r0=self.r0,
                           offset=self.initial_offset,
                           mixture_weight=self.initial_mixture_weight,
                           path=self.initial_path)

    def to_flat_dict(self) -> dict:
        d = {
            "gamma": self.gamma,
            "n_particles": self.n_particles,
            "r0_velocity": self.r0,
            "dt_time": self.dt,
            "horizon_time": self.horizon,
            "replicas": self.replicas,
            "seed": self.seed,
            "snapshot_stride": self.snapshot_stride,
            "energy_projection": self.energy_projection,
            "dt_adaptive_cap": self.dt_adaptive_cap,
            "initial_kind": self.initial_kind,
            "initial_offset_velocity": self.initial_offset,
            "initial_mixture_weight": self.initial_mixture_weight,
            "observables": self.observables,
            "moment_p_values": self.moment_p_values,
            "entropy_neighbor_k": self.entropy_neighbor_k,
        }
        if self.initial_path is not None:
            d["initial_path"] = self.initial_path
        if self.exp_xi is not None:
            d["exp_xi"] = self.exp_xi
        if self.chaos_statistic is not None:
            d["chaos_statistic"] = self.chaos_statistic
        return d


# key -> (constructor kwarg, parser, human-readable domain)
_KEY_SPECS = {
    "gamma": ("gamma", float, "real in [0, 1]"),
    "n_particles": ("n_particles", int, "integer >= 2"),
    "r0_velocity": ("r0", float, "positive real"),
    "dt_time": ("dt", float, "positive real"),
    "horizon_time": ("horizon", float, "positive real, multiple of dt_time"),
    "replicas": ("replicas", int, "integer >= 1"),
    "seed": ("seed", int, "non-negative integer"),
    "snapshot_stride": ("snapshot_stride", int, "integer >= 1"),
    "energy_projection": ("energy_projection", _parse_bool, "true or false"),
    "dt_adaptive_cap": ("dt_adaptive_cap", float, "positive real"),
    "initial_kind": ("initial_kind", str, "|".join(_INITIAL_KINDS)),
    "initial_offset_velocity": ("initial_offset", _parse_floats,
                                "comma-separated 3-vector"),
    "initial_mixture_weight": ("initial_mixture_weight", float, "real in [0, 1]"),
    "initial_path": ("initial_path", str, "file path"),
    "observables": ("observables",
                    lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
                    "comma list of " + "|".join(_OBSERVABLE_NAMES)),
    "moment_p_values": ("moment_p_values", _parse_floats, "comma list of reals"),
    "exp_xi": ("exp_xi", float, "positive real"),
    "chaos_statistic": ("chaos_statistic", str, "speed_sq|component_x"),
    "entropy_neighbor_k": ("entropy_neighbor_k", int, "integer >= 1"),
}


def parse_config_text(text: str) -> SimConfig:
    """Parse flat 'key = value' lines; '#' starts a comment."""
    kwargs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_SPECS:
            raise ValueError(
                f"line {lineno}: unknown config key {key!r}; allowed keys: "
                f"{sorted(_KEY_SPECS)}"
            )
        kwarg, parser, domain = _KEY_SPECS[key]
        try:
            kwargs[kwarg] = parser(value)
        except ValueError as exc:
            raise ValueError(
                f"line {lineno}: bad value for {key!r} (expected {domain}): {exc}"
            ) from None
    missing = {"gamma", "n_particles"} - set(kwargs)
    if missing:
        raise ValueError(f"config missing required keys: {sorted(missing)}")
    return SimConfig(**kwargs)


def parse_config(path) -> SimConfig:
    return parse_config_text(Path(path).read_text())


def write_config(path, config: SimConfig) -> None:
    lines = [f"{key} = {_fmt(value)}" for key, value in config.to_flat_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# manifests and run directories

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    config: dict
    package_version: str = __version__
    started_at: str = ""
    finished_at: str = ""
    replica_seeds: list = field(default_factory=list)
    files: dict = field(default_factory=dict)
    status: str = "incomplete"

    def write(self, run_dir: Path) -> None:
        payload = {
            "config": {k: _fmt(v) for k, v in self.config.items()},
            "package_version": self.package_version,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "replica_seeds": self.replica_seeds,
            "files": self.files,
            "status": self.status,
        }
        (run_dir / "manifest.json").write_text(json.dumps(payload, indent=2) + "\n")

    @classmethod
    def load(cls, run_dir: Path) -> "RunManifest":
        payload = json.loads((Path(run_dir) / "manifest.json").read_text())
        return cls(config=payload["config"],
                   package_version=payload.get("package_version", "unknown"),
                   started_at=payload.get("started_at", ""),
                   finished_at=payload.get("finished_at", ""),
                   replica_seeds=payload.get("replica_seeds", []),
                   files=payload.get("files", {}),
                   status=payload.get("status", "unknown"))


def _timestamp() -> str:
    return _dt.datetime.now().strftime("%Y%m%d-%H%M%S")


def _new_run_dir(out_root: Path, seed: int) -> Path:
    base = out_root / f"run-{_timestamp()}-seed{seed}"
    candidate, k = base, 1
    while candidate.exists():
        candidate = Path(f"{base}-{k}")
        k += 1
    candidate.mkdir(parents=True)
    return candidate


def _write_conserved_csv(path: Path, result: SimulationResult) -> None:
    with open(path, "w") as fh:
        fh.write("# kaclandau conserved series v1\n")
        fh.write("# columns: time,replica,px,py,pz,energy\n")
        for log in result.logs:
            r = log.manifest.get("replica", 0)
            for k in range(log.times.size):
                c = log.conserved[k]
                fh.write(f"{log.times[k]:.17g},{r},{c[0]:.17g},{c[1]:.17g},"
                         f"{c[2]:.17g},{c[3]:.17g}\n")


def _write_outputs(run_dir: Path, config: SimConfig,
                   result: SimulationResult) -> dict:
    files = {}
    conserved = run_dir / "conserved_series.csv"
    _write_conserved_csv(conserved, result)
    files[conserved.name] = _sha256(conserved)

    wants = set(config.observables)
    if wants & {"moments", "exp_moment", "entropy", "chaos"}:
        exp_specs = ()
        if "exp_moment" in wants:
            if config.exp_xi is None:
                raise ValueError("exp_moment observable requires the exp_xi key")
            exp_specs = (ExpMomentSpec(xi=config.exp_xi),)
        report = build_moment_report(
            result,
            p_values=config.moment_p_values if "moments" in wants else (2.0,),
            exp_specs=exp_specs,
            entropy="entropy" in wants,
            chaos_statistic=config.chaos_statistic if "chaos" in wants else None,
            neighbor_k=config.entropy_neighbor_k,
        )
        moments = run_dir / "moments.csv"
        report.write_moments_csv(moments)
        files[moments.name] = _sha256(moments)
        if exp_specs:
            exp_csv = run_dir / "exp_moments.csv"
            report.write_exp_csv(exp_csv)
            files[exp_csv.name] = _sha256(exp_csv)
        if report.entropy is not None:
            ent = run_dir / "entropy.csv"
            with open(ent, "w") as fh:
                fh.write("# kaclandau entropy series v1\n")
                fh.write("# columns: time,entropy_nats\n")
                for kt, t in enumerate(report.times):
                    fh.write(f"{t:.17g},{report.entropy[kt]:.17g}\n")
            files[ent.name] = _sha256(ent)
        if report.chaos_cov is not None:
            ch = run_dir / "chaos.csv"
            with open(ch, "w") as fh:
                fh.write("# kaclandau chaos covariance series v1\n")
                fh.write("# columns: time,cov,stderr\n")
                for kt, t in enumerate(report.times):
                    fh.write(f"{t:.17g},{report.chaos_cov[kt]:.17g},"
                             f"{report.chaos_stderr[kt]:.17g}\n")
            files[ch.name] = _sha256(ch)

    for log in result.logs:
        r = log.manifest["replica"]
        snap = run_dir / f"snapshot_r{r:04d}.kac"
        final = Ensemble(
            log.snapshots[-1], gamma=config.gamma,
            time=float(log.snapshot_times[-1]), replica_id=r,
            lineage=SeedLineage(config.seed, r, log.manifest["final_step"]),
        )
        save_snapshot(snap, final)
        files[snap.name] = _sha256(snap)
    return files


def run(config_or_path, out_root=".", workers: int | None = None) -> Path:
    """Execute a configuration and persist outputs under a fresh run directory.

    The manifest is written as incomplete before compute starts and finalized
    with file checksums on success, so an interrupted run is identifiable.
    """
    config = config_or_path if isinstance(config_or_path, SimConfig) \
        else parse_config(config_or_path)
    out_root = Path(out_root)
    run_dir = _new_run_dir(out_root, config.seed)
    manifest = RunManifest(
        config=config.to_flat_dict(),
        started_at=_dt.datetime.now().isoformat(timespec="seconds"),
        replica_seeds=[[config.seed, r, 0] for r in range(config.replicas)],
    )
    manifest.write(run_dir)
    cfg_copy = run_dir / "config.txt"
    write_config(cfg_copy, config)

    result = simulate(config, workers=workers)
    files = _write_outputs(run_dir, config, result)
    files[cfg_copy.name] = _sha256(cfg_copy)
    manifest.files = files
    manifest.finished_at = _dt.datetime.now().isoformat(timespec="seconds")
    manifest.status = "complete"
    manifest.write(run_dir)
    return run_dir


def resume(snapshot_path, additional_horizon: float, out_root=".",
           workers: int | None = None) -> Path:
    """Continue a stored snapshot for additional_horizon time units.

    Reads the manifest next to the snapshot for the original configuration,
    advances the seed lineage to the stored step index, and writes a new run
    directory; the continued trajectory is bit-identical to an uninterrupted
    run of the combined horizon.
    """
    snapshot_path = Path(snapshot_path)
    manifest = RunManifest.load(snapshot_path.parent)
    config = parse_config_text(
        "\n".join(f"{k} = {v}" for k, v in manifest.config.items())
    )
    e = load_snapshot(snapshot_path)
    if abs(e.gamma - config.gamma) > 0.0:
        raise ValueError(
            f"gamma mismatch: snapshot has {e.gamma}, run config has {config.gamma}"
        )
    if e.n != config.n_particles:
        raise ValueError(
            f"particle-count mismatch: snapshot has {e.n}, config has "
            f"{config.n_particles}"
        )
    stem = snapshot_path.stem          # snapshot_rNNNN
    try:
        replica = int(stem.rsplit("r", 1)[1])
    except (IndexError, ValueError):
        raise ValueError(
            f"cannot infer replica index from snapshot name {snapshot_path.name!r}"
        ) from None
    step = int(round(e.time / config.dt))
    if abs(step * config.dt - e.time) > 1e-9 * max(1.0, e.time):
        raise ValueError(
            f"snapshot time {e.time} is not a multiple of dt {config.dt}"
        )
    extra_steps = int(round(additional_horizon / config.dt))
    if abs(extra_steps * config.dt - additional_horizon) > 1e-9:
        raise ValueError(
            f"additional horizon {additional_horizon} is not a multiple of dt"
        )
    e = e.with_velocities(e.velocities,
                          lineage=SeedLineage(config.seed, replica, step))

    out_root = Path(out_root)
    run_dir = _new_run_dir(out_root, config.seed)
    new_manifest = RunManifest(
        config=dict(manifest.config),
        started_at=_dt.datetime.now().isoformat(timespec="seconds"),
        replica_seeds=[[config.seed, replica, step]],
    )
    new_manifest.write(run_dir)

    log = simulate_replica(config, replica, start=e, extra_steps=extra_steps)
    result = SimulationResult(config=config, logs=[log])
    files = _write_outputs(run_dir, config, result)
    new_manifest.files = files
    new_manifest.finished_at = _dt.datetime.now().isoformat(timespec="seconds")
    new_manifest.status = "complete"
    new_manifest.write(run_dir)
    return run_dir


def verify(suite: str):
    """Run a named verification suite; returns a list of criterion results."""
    from . import verification

    return verification.run_suite(suite)


def report_summary(run_dir) -> dict:
    """Summarize a run directory: manifest echo plus quick conserved stats."""
    run_dir = Path(run_dir)
    manifest = RunManifest.load(run_dir)
    summary = {
        "run_dir": str(run_dir),
        "status": manifest.status,
        "package_version": manifest.package_version,
        "config": dict(manifest.config),
        "files": dict(manifest.files),
    }
    conserved = run_dir / "conserved_series.csv"
    if conserved.exists():
        data = np.loadtxt(conserved, delimiter=",", ndmin=2)
        t = data[:, 0]
        energy = data[:, 5]
        p_norm = np.linalg.norm(data[:, 2:5], axis=1)
        summary["conserved"] = {
            "t_final": float(t.max()),
            "energy_initial": float(energy[np.argmin(t)]),
            "energy_final_mean": float(energy[t == t.max()].mean()),
            "max_momentum_norm": float(p_norm.max()),
        }
    return summary
