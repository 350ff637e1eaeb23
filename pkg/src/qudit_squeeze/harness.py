"""Sweep orchestration: config ingestion, backend dispatch, persistence, fits.

A run is described by one strict-mode JSON document (unknown keys anywhere
are rejected, catching sweep-definition typos):

    {
      "task": {"d": 3, "encoders": "xy"},
      "hamiltonian": {"variant": "TAT", "chi": 1.0},
      "backend": "SYMMETRIC",            # DENSE | SYMMETRIC | GDTWA
      "N_list": [8, 16, 32],
      "t_grid": {"t_max": 0.3, "num": 200},
      "gdtwa": {"n_traj": 2000, "dt": 0.001},
      "probe": null,
      "master_seed": 1234,
      "output_dir": "out"
    }

t_grid alternatives: {"times": [...]} for an explicit grid, and an optional
"t_max_per_N" map overriding t_max for individual N.  When "probe" is null
the canonical probe of the task is used (|0> for the in-plane qutrit, the
even-m superposition for the d=5 vector task, |+1/2> for the scalar qubit);
unknown tasks fall back to the numerical probe optimizer.

Outputs per sweep: trace_N{N}.csv (squeezing-trace-v1 schema: time, xi2
[, xi2_err], kappa_opt, C row-major, G diagonal), scaling.csv
(N, xi2_op, t_op), summary.json.  Identical config plus seed gives
byte-identical files; the worker count (QUDIT_SQUEEZE_WORKERS) only
parallelizes independent sweep points and never changes results.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import (DenseSpace, HamiltonianSpec, SymmetricSpace,
                       build_hamiltonian, evolve)
from .gdtwa import GdtwaConfig, run_gdtwa
from .qfim import SINGULAR, OptimizerConfig, SensingTask, optimize_probe
from .readout import (SqueezingRecord, build_readout, collective_expectations,
                      inplane_moments, records_to_csv, vector_xi2,
                      wineland_xi2, xi2_kappa_from_moments)

__all__ = [
    "ConfigError",
    "InfeasibleTaskError",
    "RunConfig",
    "ScalingFit",
    "load_config",
    "canonical_probe",
    "run_sweep",
    "fit_scaling",
    "witness_diagnostic",
    "emit_plotdata",
    "fig2_config",
    "fig3_config",
]


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration (CLI exit code 3)."""


class InfeasibleTaskError(RuntimeError):
    """The sensing task admits no regular constraint-satisfying probe (exit 2)."""


@dataclass(frozen=True)
class RunConfig:
    task_d: int
    task_encoders: str
    hamiltonian: HamiltonianSpec
    backend: str
    N_list: tuple
    times: tuple | None
    t_max: float | None
    t_num: int
    t_max_per_N: dict
    gdtwa_n_traj: int
    gdtwa_dt: float
    gdtwa_validate_dt: bool
    probe: tuple | None
    master_seed: int
    output_dir: str

    def time_grid(self, N):
        if self.times is not None:
            return np.asarray(self.times, dtype=float)
        t_max = self.t_max_per_N.get(N, self.t_max)
        grid = np.linspace(0.0, t_max, self.t_num)
        if self.backend == "GDTWA":
            # snap onto the fixed RK4 step grid
            grid = np.unique(np.round(grid / self.gdtwa_dt).astype(int)) * self.gdtwa_dt
        return grid


def _take(doc, key, required=True, default=None):
    if key not in doc:
        if required:
            raise ConfigError(f"missing config key {key!r}")
        return default
    return doc[key]


def _reject_unknown(doc, allowed, where):
    unknown = set(doc) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown config key(s) {sorted(unknown)} in {where}")


def _parse_hamiltonian(doc):
    _reject_unknown(doc, {"variant", "chi", "J0", "gamma", "V0"}, "hamiltonian")
    variant = _take(doc, "variant")
    try:
        if variant == "OAT":
            return HamiltonianSpec.oat(float(_take(doc, "chi")))
        if variant == "TAT":
            return HamiltonianSpec.tat(float(_take(doc, "chi")))
        if variant == "XY":
            return HamiltonianSpec.xy(float(_take(doc, "J0")),
                                      float(_take(doc, "gamma")),
                                      float(_take(doc, "V0")))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad hamiltonian parameters: {err}") from None
    raise ConfigError(f"unknown hamiltonian variant {variant!r}")


def load_config(doc):
    """Validate a config document (dict or JSON text) into a RunConfig."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from None
    _reject_unknown(doc, {"task", "hamiltonian", "backend", "N_list", "t_grid",
                          "gdtwa", "probe", "master_seed", "output_dir"}, "config")
    task = _take(doc, "task")
    _reject_unknown(task, {"d", "encoders"}, "task")
    ham = _parse_hamiltonian(_take(doc, "hamiltonian"))
    backend = _take(doc, "backend")
    if backend not in ("DENSE", "SYMMETRIC", "GDTWA"):
        raise ConfigError(f"unknown backend {backend!r}")
    if backend == "GDTWA" and ham.variant != "XY":
        raise ConfigError("the GDTWA backend simulates XY Hamiltonians")
    if backend == "SYMMETRIC" and ham.variant == "XY" and ham.gamma != 0:
        raise ConfigError("XY with gamma > 0 needs backend DENSE or GDTWA")
    N_list = tuple(int(n) for n in _take(doc, "N_list"))
    if not N_list or any(n < 1 for n in N_list):
        raise ConfigError("N_list must contain positive integers")
    tg = _take(doc, "t_grid")
    _reject_unknown(tg, {"times", "t_max", "num", "t_max_per_N"}, "t_grid")
    times = tg.get("times")
    if times is not None:
        times = tuple(float(t) for t in times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("t_grid.times must be strictly increasing")
        t_max, t_num = None, 0
    else:
        t_max = float(_take(tg, "t_max"))
        t_num = int(tg.get("num", 200))
        if t_max <= 0 or t_num < 1:
            raise ConfigError("t_grid needs t_max > 0 and num >= 1")
    t_max_per_N = {int(k): float(v) for k, v in tg.get("t_max_per_N", {}).items()}
    gd = doc.get("gdtwa", {})
    _reject_unknown(gd, {"n_traj", "dt", "validate_dt"}, "gdtwa")
    if backend == "GDTWA" and "n_traj" not in gd:
        raise ConfigError("backend GDTWA requires gdtwa.n_traj")
    probe = doc.get("probe")
    if probe is not None:
        probe = tuple(complex(re, im) for re, im in probe)
    return RunConfig(
        task_d=int(task["d"]),
        task_encoders=str(task["encoders"]),
        hamiltonian=ham,
        backend=backend,
        N_list=N_list,
        times=times,
        t_max=t_max,
        t_num=t_num,
        t_max_per_N=t_max_per_N,
        gdtwa_n_traj=int(gd.get("n_traj", 2000)),
        gdtwa_dt=float(gd.get("dt", 1e-3)),
        gdtwa_validate_dt=bool(gd.get("validate_dt", True)),
        probe=probe,
        master_seed=int(_take(doc, "master_seed")),
        output_dir=str(_take(doc, "output_dir")),
    )


def canonical_probe(task, seed=0):
    """Optimal single-site probe for the task.

    Closed-form states are returned for the scalar qubit, in-plane qutrit,
    and d=5 vector tasks; anything else runs the numerical optimizer and
    raises InfeasibleTaskError when no regular probe exists.
    """
    key = (task.d, task.labels)
    if key == (2, "x"):
        return np.array([1.0, 0.0], dtype=complex)
    if key == (3, "xy"):
        return np.array([0.0, 1.0, 0.0], dtype=complex)
    if key == (5, "xyz"):
        z = np.zeros(5, dtype=complex)
        z[0] = z[4] = 1j / 2
        z[2] = 1 / math.sqrt(2)
        return z
    result = optimize_probe(task, OptimizerConfig(seed=seed))
    if result.cost == SINGULAR:
        raise InfeasibleTaskError(
            f"task d={task.d} encoders={task.labels!r} has no regular probe")
    return result.state


def _exact_records(config, N):
    task = SensingTask.from_axes(config.task_d, config.task_encoders)
    probe = np.asarray(config.probe, dtype=complex) if config.probe is not None \
        else canonical_probe(task)
    readout = build_readout(probe, task)
    space = (SymmetricSpace if config.backend == "SYMMETRIC" else DenseSpace)(
        N, task.d)
    H = build_hamiltonian(config.hamiltonian, space, readout)
    t_grid = config.time_grid(N)
    state0 = space.product_state(probe)
    records = []
    for snap in evolve(state0, H, t_grid):
        if task.k == 2:
            m = inplane_moments(snap, readout)
            kappa, xi2 = xi2_kappa_from_moments(m, N)
            C = m.covariance()[:2, :2]
            G = m.G
        elif task.k == 3:
            C, G = collective_expectations(snap, readout)
            kappa, xi2 = 0.0, vector_xi2(snap, readout)
        else:
            from .algebra import spin_operators
            sx, sy, sz = spin_operators(task.d)
            vy = snap.apply_one_body(sy)
            my = np.vdot(snap.amps, vy).real
            C = np.array([[np.vdot(vy, vy).real - my * my]])
            G = np.array([[snap.expect_one_body(sz).real]])
            kappa, xi2 = 0.0, wineland_xi2(snap)
        records.append(SqueezingRecord(time=snap.t, C=C, G=G,
                                       kappa_opt=kappa, xi2=xi2))
    return records


def _product_state_record(probe, readout, N):
    """Exact t=0 record of |phi>^{tensor N} from single-site moments."""
    k = readout.k
    vecs = [l @ probe for l in readout.slds]
    means = np.array([(probe.conj() @ v).real for v in vecs])
    C = np.empty((k, k))
    G = np.empty((k, k))
    for a in range(k):
        for b in range(k):
            C[a, b] = N * ((vecs[a].conj() @ vecs[b]).real - means[a] * means[b])
            G[a, b] = N * (probe.conj() @ readout.transduction[a][b] @ probe).real
    return SqueezingRecord(time=0.0, C=C, G=G, kappa_opt=0.0, xi2=1.0,
                           xi2_err=0.0)


def _gdtwa_records(config, N):
    task = SensingTask.from_axes(config.task_d, config.task_encoders)
    probe = np.asarray(config.probe, dtype=complex) if config.probe is not None \
        else canonical_probe(task)
    readout = build_readout(probe, task)
    t_grid = config.time_grid(N)
    records = []
    if t_grid[0] == 0.0:
        # the t=0 state is the product probe itself: emit its exact record
        # rather than a sampled estimate, anchoring the trace at xi^2 = 1
        records.append(_product_state_record(probe, readout, N))
        t_grid = t_grid[1:]
    if len(t_grid):
        gcfg = GdtwaConfig(n_traj=config.gdtwa_n_traj,
                           master_seed=config.master_seed,
                           dt=config.gdtwa_dt,
                           t_out=tuple(t_grid),
                           validate_dt=config.gdtwa_validate_dt)
        result = run_gdtwa(gcfg, config.hamiltonian, probe, readout, N)
        records.extend(result.records)
    return records


def _sweep_point(args):
    config, N = args
    if config.backend == "GDTWA":
        return N, _gdtwa_records(config, N)
    return N, _exact_records(config, N)


def run_sweep(config):
    """Run every N in the sweep, persist traces and summary, return summary."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(config, N) for N in config.N_list]
    workers = int(os.environ.get("QUDIT_SQUEEZE_WORKERS", "1"))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    traces = dict(results)
    emit_plotdata(traces, out_dir)
    summary = {"per_N": {}}
    for N in config.N_list:
        records = traces[N]
        finite = [(r.xi2, r.time) for r in records if math.isfinite(r.xi2)]
        if not finite:
            summary["per_N"][str(N)] = {"xi2_op": None, "t_op": None}
            continue
        xi2_op, t_op = min(finite)
        summary["per_N"][str(N)] = {
            "xi2_op": xi2_op,
            "t_op": t_op,
            "witness_trF_lower_bound": witness_diagnostic(xi2_op, N),
        }
    points = [(N, summary["per_N"][str(N)]["xi2_op"]) for N in config.N_list
              if summary["per_N"][str(N)]["xi2_op"] is not None]
    if len(points) >= 4:
        fit = fit_scaling(points)
        summary["scaling"] = {"k": fit.k, "prefactor": fit.prefactor, "r2": fit.r2}
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def emit_plotdata(traces, out_dir):
    """Write the per-sweep CSV family.

    trace_N{N}.csv carries the full record schema; plot_N{N}.csv is the
    bare (t, xi2) pair per point, with an xi2_err column appended when the
    records carry error bars; scaling.csv lists (N, xi2_op, t_op).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for N in sorted(traces):
        records = traces[N]
        records_to_csv(records, out_dir / f"trace_N{N}.csv")
        with_err = any(r.xi2_err is not None for r in records)
        lines = ["# schema: squeezing-plot-v1",
                 "t,xi2" + (",xi2_err" if with_err else "")]
        for r in records:
            row = f"{r.time:.12g},{r.xi2:.12g}"
            if with_err:
                err = r.xi2_err if r.xi2_err is not None else float("nan")
                row += f",{err:.12g}"
            lines.append(row)
        (out_dir / f"plot_N{N}.csv").write_text("\n".join(lines) + "\n")
    lines = ["# schema: squeezing-scaling-v1", "N,xi2_op,t_op"]
    for N in sorted(traces):
        finite = [(r.xi2, r.time) for r in traces[N] if math.isfinite(r.xi2)]
        if finite:
            xi2_op, t_op = min(finite)
            lines.append(f"{N},{xi2_op:.12g},{t_op:.12g}")
    with open(out_dir / "scaling.csv", "w") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class ScalingFit:
    points: tuple
    k: float
    prefactor: float
    r2: float
    gamma: float | None = None


def fit_scaling(points, gamma=None):
    """Least-squares fit of xi2_op ~ prefactor * N^{-k} on log-log axes."""
    pts = [(float(n), float(x)) for n, x in points]
    if len(pts) < 4:
        raise ValueError(f"need at least 4 points for a scaling fit, got {len(pts)}")
    if any(x <= 0 or n <= 0 for n, x in pts):
        raise ValueError("scaling fit requires positive N and xi2 values")
    logN = np.log([n for n, _ in pts])
    logx = np.log([x for _, x in pts])
    A = np.stack([logN, np.ones_like(logN)], axis=1)
    coef, *_ = np.linalg.lstsq(A, logx, rcond=None)
    slope, intercept = coef
    pred = A @ coef
    ss_res = float(np.sum((logx - pred) ** 2))
    ss_tot = float(np.sum((logx - logx.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return ScalingFit(points=tuple(pts), k=float(-slope),
                      prefactor=float(np.exp(intercept)), r2=r2, gamma=gamma)


def witness_diagnostic(xi2, N):
    """Entanglement-witness diagnostic N / sqrt(xi2) (a Tr(F) lower bound)."""
    if not xi2 > 0:
        raise ValueError("xi2 must be positive")
    return N / math.sqrt(xi2)


# ----------------------------------------------------------------------------
# figure presets (desk scale)
# ----------------------------------------------------------------------------

#: squeezing windows 1/chi for the TAT sweep, calibrated so the minimum
#: (t_op ~ 0.025 (8/N)^0.7) sits at ~40% of the grid for every N
_TAT_WINDOWS = {8: 0.065, 16: 0.040, 32: 0.025, 64: 0.015, 128: 0.0095, 256: 0.006}

#: base windows 1/J0 for the XY chain at V0/J0 = 2, per gamma; the optimum
#: time shrinks with N like the all-to-all twisting time for long range and
#: saturates near J0 t ~ 0.2 for gamma >= 1
_XY_WINDOWS = {0.0: 0.16, 0.5: 0.30, 1.0: 0.35, 2.0: 0.45, 3.0: 0.50}
_XY_N_EXPONENT = {0.0: 2 / 3, 0.5: 0.2, 1.0: 0.0, 2.0: 0.0, 3.0: 0.0}


def fig2_config(out_dir, n_list=(8, 16, 32, 64, 128, 256), num=200, seed=2024):
    """Exact symmetric-backend TAT sweep reproducing the N scaling study."""
    doc = {
        "task": {"d": 3, "encoders": "xy"},
        "hamiltonian": {"variant": "TAT", "chi": 1.0},
        "backend": "SYMMETRIC",
        "N_list": list(n_list),
        "t_grid": {"t_max": _TAT_WINDOWS[max(_TAT_WINDOWS)], "num": num,
                   "t_max_per_N": {str(n): _TAT_WINDOWS.get(n, 0.065 * (8 / n) ** 0.7)
                                   for n in n_list}},
        "probe": None,
        "master_seed": seed,
        "output_dir": str(out_dir),
    }
    return load_config(doc)


def fig3_config(out_dir, gamma, n_list=(16, 32, 64, 128), n_traj=2000,
                dt=None, num=80, seed=2024):
    """GDTWA power-law XY sweep at V0/J0 = 2 for one interaction range.

    The step size defaults to 1e-3/J0; the slow-dynamics short-range runs
    (gamma >= 1) use 2e-3, which the mandatory dt-halving validation covers.
    """
    base = _XY_WINDOWS.get(gamma, 0.5)
    expo = _XY_N_EXPONENT.get(gamma, 0.0)
    if dt is None:
        dt = 1e-3 if gamma < 1 else 2e-3
    windows = {str(n): base * (16 / n) ** expo for n in n_list}
    doc = {
        "task": {"d": 3, "encoders": "xy"},
        "hamiltonian": {"variant": "XY", "J0": 1.0, "gamma": gamma, "V0": 2.0},
        "backend": "GDTWA",
        "N_list": list(n_list),
        "t_grid": {"t_max": base, "num": num, "t_max_per_N": windows},
        "gdtwa": {"n_traj": n_traj, "dt": dt},
        "probe": None,
        "master_seed": seed,
        "output_dir": str(out_dir),
    }
    return load_config(doc)
