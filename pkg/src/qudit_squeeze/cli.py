"""qudit-squeeze command line: sweeps, fits, figure presets, verifiers.

Exit codes: 0 success, 1 verification failure, 2 infeasible sensing task,
3 configuration error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import povm as povm_mod
from .gdtwa import GdtwaConfig, run_gdtwa
from .harness import (ConfigError, InfeasibleTaskError, canonical_probe,
                      fig2_config, fig3_config, fit_scaling, load_config,
                      run_sweep)
from .qfim import SINGULAR, OptimizerConfig, SensingTask, optimize_probe
from .readout import build_readout


def _cmd_run(args):
    config = load_config(Path(args.config).read_text())
    summary = run_sweep(config)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _read_scaling_csv(path):
    points = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or line.startswith("N,"):
            continue
        parts = line.split(",")
        points.append((float(parts[0]), float(parts[1])))
    return points


def _cmd_fit(args):
    points = _read_scaling_csv(args.infile)
    fit = fit_scaling(points)
    print(f"k = {fit.k:.6f}")
    print(f"prefactor = {fit.prefactor:.6f}")
    print(f"R^2 = {fit.r2:.6f}")
    if args.out:
        Path(args.out).write_text(json.dumps(
            {"k": fit.k, "prefactor": fit.prefactor, "r2": fit.r2},
            indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_fig2(args):
    n_list = tuple(int(n) for n in args.n_list.split(",")) if args.n_list else \
        (8, 16, 32, 64, 128, 256)
    config = fig2_config(args.out, n_list=n_list, num=args.num, seed=args.seed)
    summary = run_sweep(config)
    if "scaling" in summary:
        print(f"fitted k = {summary['scaling']['k']:.4f} "
              f"(R^2 = {summary['scaling']['r2']:.4f})")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_fig3(args):
    n_list = tuple(int(n) for n in args.n_list.split(",")) if args.n_list else \
        (16, 32, 64, 128)
    config = fig3_config(args.out, gamma=args.gamma, n_list=n_list,
                         n_traj=args.n_traj, seed=args.seed)
    summary = run_sweep(config)
    if "scaling" in summary:
        print(f"gamma={args.gamma}: fitted k = {summary['scaling']['k']:.4f}")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_qfim_optimize(args):
    task = SensingTask.from_axes(args.d, args.task)
    result = optimize_probe(task, OptimizerConfig(restarts=args.restarts,
                                                  seed=args.seed))
    singular = result.cost == SINGULAR
    doc = {
        "d": args.d,
        "task": args.task,
        "singular": singular,
        "cost": None if singular else result.cost,
        "commutativity_residual": result.commutativity_residual,
        "converged": result.converged,
        "restarts": result.restarts_used,
        "state": [[float(z.real), float(z.imag)] for z in result.state],
        "f": [[float(x) for x in row] for row in result.qfim.f],
    }
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 2 if singular else 0


_GDTWA_COLUMNS = "t,xi2,xi2_err,kappa_opt,Cxx,Cxy,Cyy,Gxx,Gyy"


def _cmd_gdtwa_sim(args):
    config = load_config(Path(args.config).read_text())
    if config.backend != "GDTWA":
        raise ConfigError("gdtwa-sim requires backend GDTWA")
    if len(config.N_list) != 1:
        raise ConfigError("gdtwa-sim simulates a single N; use run for sweeps")
    N = config.N_list[0]
    task = SensingTask.from_axes(config.task_d, config.task_encoders)
    probe = np.asarray(config.probe, dtype=complex) if config.probe is not None \
        else canonical_probe(task)
    readout = build_readout(probe, task)
    gcfg = GdtwaConfig(n_traj=config.gdtwa_n_traj, master_seed=config.master_seed,
                       dt=config.gdtwa_dt, t_out=tuple(config.time_grid(N)),
                       validate_dt=config.gdtwa_validate_dt)
    result = run_gdtwa(gcfg, config.hamiltonian, probe, readout, N)
    lines = ["# schema: gdtwa-trace-v1", _GDTWA_COLUMNS]
    for r in result.records:
        err = r.xi2_err if r.xi2_err is not None else float("nan")
        lines.append(",".join(f"{x:.12g}" for x in (
            r.time, r.xi2, err, r.kappa_opt,
            r.C[0, 0], r.C[0, 1], r.C[1, 1], r.G[0, 0], r.G[1, 1])))
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {args.out} ({len(result.records)} rows, "
          f"{result.n_traj} trajectories)")
    return 0


def _cmd_povm_verify(args):
    failures = 0

    def report(name, ok, detail=""):
        nonlocal failures
        failures += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'}  {name}{'  ' + detail if detail else ''}")

    povm = povm_mod.build_effects()
    total = sum(povm.effects)
    report("completeness sum(E) = I", np.max(np.abs(total - np.eye(3))) <= 1e-12)
    mins = [np.linalg.eigvalsh(E).min() for E in povm.effects]
    report("positivity min eig(E) >= -1e-12", min(mins) >= -1e-12,
           f"min eig {min(mins):.2e}")
    model = povm_mod.build_naimark()
    V, U = model.isometry, model.unitary
    report("isometry V+V = I", np.max(np.abs(V.conj().T @ V - np.eye(3))) <= 1e-12)
    report("U unitary", np.max(np.abs(U.conj().T @ U - np.eye(8))) <= 1e-12)
    report("U restricted to F=1 equals V", np.max(np.abs(U[:, :3] - V)) <= 1e-10)
    ok = True
    for mu, label in enumerate(povm_mod.EFFECT_OUTCOMES):
        proj = np.zeros((8, 8))
        proj[povm_mod._IDX[label], povm_mod._IDX[label]] = 1.0
        induced = V.conj().T @ proj @ V
        ok &= np.max(np.abs(induced - povm.effects[mu])) <= 1e-12
    report("induced effects match E_1..E_6", ok)

    task = SensingTask.from_axes(3, "xy")
    readout = build_readout(np.array([0, 1, 0], dtype=complex), task)
    report("target {Jy,Jz} equals readout l_x",
           np.max(np.abs(povm.target_x - readout.slds[0])) <= 1e-12)
    report("target {Jz,Jx} equals -(readout l_y)",
           np.max(np.abs(povm.target_y + readout.slds[1])) <= 1e-12)

    rng = np.random.default_rng(args.seed)
    worst = 0.0
    dark_worst = 0.0
    for _ in range(1000):
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        v /= np.linalg.norm(v)
        rho = np.outer(v, v.conj())
        lx_hat, ly_hat = povm_mod.reconstruct(rho, povm)
        worst = max(worst,
                    abs(lx_hat - np.trace(rho @ povm.target_x).real),
                    abs(ly_hat - np.trace(rho @ povm.target_y).real))
        dark_worst = max(dark_worst, povm_mod.dark_channel_occupation(rho, model))
    report("reconstruction on 1000 random states <= 1e-10", worst <= 1e-10,
           f"max err {worst:.2e}")
    report("dark channels stay empty", dark_worst <= 1e-12,
           f"max occupation {dark_worst:.2e}")

    if args.shots:
        v = rng.normal(size=3) + 1j * rng.normal(size=3)
        v /= np.linalg.norm(v)
        rho = np.outer(v, v.conj())
        exact = np.trace(rho @ povm.target_x).real
        stats = povm_mod.simulate_readout(rho, model, shots=args.shots,
                                          seed=args.seed)
        est = povm_mod.reconstruct_from_stats(stats)[0]
        print(f"shot mode: {args.shots} shots, <Q_yz> error "
              f"{abs(est - exact):.4f} (expected scale "
              f"{2.0 / math.sqrt(args.shots):.4f})")
    return 1 if failures else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="qudit-squeeze",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a sweep config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("fit", help="power-law fit of a scaling.csv")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("fig2", help="exact TAT N-scaling preset")
    p.add_argument("--out", required=True)
    p.add_argument("--n-list")
    p.add_argument("--num", type=int, default=200)
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=_cmd_fig2)

    p = sub.add_parser("fig3", help="GDTWA power-law XY preset")
    p.add_argument("--out", required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--n-list")
    p.add_argument("--n-traj", type=int, default=2000)
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=_cmd_fig3)

    p = sub.add_parser("qfim-optimize", help="optimize the single-site probe")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--task", required=True, help="encoder axes, e.g. xy or xyz")
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_qfim_optimize)

    p = sub.add_parser("gdtwa-sim", help="single-N trajectory simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gdtwa_sim)

    p = sub.add_parser("povm-verify", help="verify the qutrit POVM battery")
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_povm_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 3
    except InfeasibleTaskError as err:
        print(f"infeasible task: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
