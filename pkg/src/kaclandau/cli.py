"""Command-line entry point.

Subcommands: simulate, couple, chaos, verify, report.  Worker parallelism is
controlled only by the KACLANDAU_WORKERS environment variable; physics
parameters come exclusively from the config file.
"""

from __future__ import annotations

import argparse
import json
import sys

from .ensemble import InitialSpec
from .harness import parse_config, report_summary, run
from .integrator import WORKERS_ENV_VAR


def _parse_triple(text: str) -> tuple:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected dx,dy,dz, got {text!r}")
    return tuple(parts)


def _parse_int_list(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _cmd_simulate(args) -> int:
    run_dir = run(args.config, out_root=args.out_root)
    print(run_dir)
    return 0


def _cmd_couple(args) -> int:
    from .coupling import coupled_simulate
    from .harness import RunManifest, _new_run_dir, _sha256, write_config
    import datetime as dt
    from pathlib import Path

    config = parse_config(args.config)
    spec_a = config.initial_spec()
    if any(args.shift):
        spec_b = InitialSpec(kind="two_ball_mixture", r0=config.r0,
                             offset=args.shift, mixture_weight=0.0)
    else:
        spec_b = spec_a
    report = coupled_simulate(config, spec_a, spec_b, m_list=args.m_list)

    run_dir = _new_run_dir(Path(args.out_root), config.seed)
    csv = run_dir / "coupling_report.csv"
    report.write_csv(csv)
    cfg_copy = run_dir / "config.txt"
    write_config(cfg_copy, config)
    manifest = RunManifest(
        config=config.to_flat_dict(),
        started_at=dt.datetime.now().isoformat(timespec="seconds"),
        finished_at=dt.datetime.now().isoformat(timespec="seconds"),
        replica_seeds=[[config.seed, r, 0] for r in range(config.replicas)],
        files={csv.name: _sha256(csv), cfg_copy.name: _sha256(cfg_copy)},
        status="complete",
    )
    manifest.write(run_dir)
    print(run_dir)
    print(f"u0 = {report.u0:.6g}")
    for km, m in enumerate(report.m_list):
        print(f"u_{m}(T) = {report.u_mean[km, -1]:.6g} "
              f"+- {report.u_stderr[km, -1]:.6g}")
    return 0


def _cmd_chaos(args) -> int:
    from .harness import RunManifest, _new_run_dir, _sha256, write_config
    from .oracle import self_convergence_table
    import datetime as dt
    from pathlib import Path

    config = parse_config(args.config)
    table = self_convergence_table(config, args.n_list, args.t_probe)
    run_dir = _new_run_dir(Path(args.out_root), config.seed)
    csv = run_dir / "self_convergence.csv"
    table.write_csv(csv)
    cfg_copy = run_dir / "config.txt"
    write_config(cfg_copy, config)
    manifest = RunManifest(
        config=config.to_flat_dict(),
        started_at=dt.datetime.now().isoformat(timespec="seconds"),
        finished_at=dt.datetime.now().isoformat(timespec="seconds"),
        files={csv.name: _sha256(csv), cfg_copy.name: _sha256(cfg_copy)},
        status="complete",
    )
    manifest.write(run_dir)
    print(run_dir)
    for i in range(table.n_small.size):
        print(f"W2(N={table.n_small[i]}, N={table.n_large[i]}) at "
              f"t={table.t}: {table.w2[i]:.6g} +- {table.stderr[i]:.6g}")
    return 0


def _cmd_verify(args) -> int:
    from .verification import run_suite

    results = run_suite(args.suite)
    all_pass = True
    for res in results:
        print(res.line())
        all_pass &= res.passed
    print(json.dumps({
        "suite": args.suite,
        "passed": all_pass,
        "criteria": [
            {"number": r.number, "name": r.name, "passed": r.passed,
             "measured": r.measured, "threshold": r.threshold,
             "runtime_s": round(r.runtime_s, 2)}
            for r in results
        ],
    }, indent=2))
    return 0 if all_pass else 1


def _cmd_report(args) -> int:
    print(json.dumps(report_summary(args.run_dir), indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kaclandau",
        description="Conservative Kac-particle simulator and verification lab "
                    "for the space-homogeneous Landau equation with hard "
                    "potentials.",
        epilog=f"Set {WORKERS_ENV_VAR} to parallelize over replicas; results "
               "are identical for any worker count.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a config, persist CSVs + manifest")
    p_sim.add_argument("config")
    p_sim.add_argument("--out-root", default=".")
    p_sim.set_defaults(fn=_cmd_simulate)

    p_cpl = sub.add_parser("couple", help="synchronously coupled pair of systems")
    p_cpl.add_argument("config")
    p_cpl.add_argument("--shift", type=_parse_triple, default=(0.1, 0.0, 0.0),
                       help="initial-law translation of family b (dx,dy,dz)")
    p_cpl.add_argument("--m-list", type=_parse_int_list, default=(1, 2, 4))
    p_cpl.add_argument("--out-root", default=".")
    p_cpl.set_defaults(fn=_cmd_couple)

    p_chaos = sub.add_parser("chaos", help="self-convergence table over N")
    p_chaos.add_argument("config")
    p_chaos.add_argument("--n-list", type=_parse_int_list,
                         default=(128, 256, 512))
    p_chaos.add_argument("--t-probe", type=float, default=0.5)
    p_chaos.add_argument("--out-root", default=".")
    p_chaos.set_defaults(fn=_cmd_chaos)

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite", choices=["kernels", "conservation",
                                         "inequalities", "oracle", "chaos",
                                         "stability"])
    p_ver.set_defaults(fn=_cmd_verify)

    p_rep = sub.add_parser("report", help="summarize a run directory")
    p_rep.add_argument("run_dir")
    p_rep.set_defaults(fn=_cmd_report)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
