"""Single-site quantum Fisher information matrix and probe-state optimization.

For a pure single-site state |phi> and encoding generators {s_a}, the QFIM is

    f_ab = 4 [ <q_ab> - <s_a><s_b> ],   q_ab = (s_a s_b + s_b s_a)/2,

and the figure of merit for simultaneous estimation is Tr(f^-1), subject to
the weak-commutativity constraint <phi|[s_a, s_b]|phi> = 0 for all pairs and
to regularity det(f) > 0.  Both f and the constraint come from one Gram
matrix: with w_a = s_a|phi>, Re(w_a^+ w_b) is the symmetrized second moment
and Im(w_a^+ w_b) is <[s_a, s_b]>/(2i).

optimize_probe runs a seeded multi-restart Nelder-Mead search on the real
parameterization of |phi> with a quadratic constraint penalty; see the
OptimizerConfig defaults for the continuation schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .algebra import spin_operators

#: Sentinel cost for tasks whose QFIM is singular on the constraint set.
SINGULAR = math.inf

#: det(f) above this value counts as regular (task feasible at the state).
REGULARITY_EPS = 1e-8

__all__ = [
    "SensingTask",
    "SingleSiteQFIM",
    "OptimizationResult",
    "OptimizerConfig",
    "SINGULAR",
    "REGULARITY_EPS",
    "qfim",
    "commutativity_residual",
    "cost_from_qfim",
    "optimize_probe",
]

_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class SensingTask:
    """Local dimension plus the ordered list of encoding generators.

    ``encoders`` may be a string of axis labels ("xy", "xyz", "x") resolved
    to spin operators of dimension d, or an explicit sequence of Hermitian
    (d, d) arrays for the general case.
    """

    d: int
    encoders: tuple = ()
    labels: str = ""

    @classmethod
    def from_axes(cls, d, axes):
        ops = spin_operators(d)
        try:
            enc = tuple(ops[_AXIS_INDEX[c]] for c in axes)
        except KeyError as err:
            raise ValueError(f"unknown encoder axis {err.args[0]!r}; use x, y, z") from None
        return cls(d=d, encoders=enc, labels=axes)

    @classmethod
    def from_operators(cls, d, operators):
        enc = tuple(np.asarray(op, dtype=complex) for op in operators)
        if not 1 <= len(enc) <= d * d - 1:
            raise ValueError(f"need between 1 and d^2-1 encoders, got {len(enc)}")
        for op in enc:
            if op.shape != (d, d):
                raise ValueError(f"encoder shape {op.shape} does not match d={d}")
        return cls(d=d, encoders=enc)

    @property
    def k(self):
        return len(self.encoders)

    def encoder_stack(self):
        return np.stack(self.encoders)


@dataclass(frozen=True)
class SingleSiteQFIM:
    """k x k real symmetric PSD matrix; entries per squared encoding phase."""

    f: np.ndarray

    @property
    def k(self):
        return self.f.shape[0]


def _check_state(state, d):
    z = np.asarray(state, dtype=complex).reshape(-1)
    if z.shape != (d,):
        raise ValueError(f"state dimension {z.shape} does not match task d={d}")
    n = np.linalg.norm(z)
    if abs(n - 1.0) > 1e-10:
        raise ValueError(f"state norm deviates from 1 by {abs(n - 1.0):.2e}")
    return z


def _gram(z, enc_stack):
    """w_a = s_a|z> for all encoders; returns (means, Gram matrix w^+ w)."""
    w = enc_stack @ z  # (k, d)
    means = (w @ z.conj()).real
    gram = w.conj() @ w.T
    return means, gram


def qfim(state, task):
    """Single-site QFIM f_ab = 4 Cov_phi(s_a, s_b) (symmetrized covariance)."""
    z = _check_state(state, task.d)
    means, gram = _gram(z, task.encoder_stack())
    f = 4.0 * (gram.real - np.outer(means, means))
    return SingleSiteQFIM(f=f)


def commutativity_residual(state, task):
    """max over encoder pairs of |<phi|[s_a, s_b]|phi>|."""
    z = _check_state(state, task.d)
    _, gram = _gram(z, task.encoder_stack())
    # <[s_a, s_b]> = 2i Im(w_a^+ w_b)
    return float(np.max(np.abs(2.0 * np.triu(gram.imag, k=1)), initial=0.0))


def cost_from_qfim(q, regularity_eps=REGULARITY_EPS):
    """Tr(f^-1), or the SINGULAR sentinel when det(f) <= regularity_eps."""
    f = q.f if isinstance(q, SingleSiteQFIM) else np.asarray(q, dtype=float)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValueError(f"QFIM must be square, got shape {f.shape}")
    det = np.linalg.det(f)
    if det <= regularity_eps:
        return SINGULAR
    return float(np.trace(np.linalg.inv(f)))


@dataclass(frozen=True)
class OptimizerConfig:
    """Restart/penalty schedule for optimize_probe.

    The search runs ``restarts`` cheap Nelder-Mead descents at the initial
    penalty weight, then polishes the ``polish_top`` best candidates through
    ``penalty_rounds`` continuation rounds with the weight doubled each round.
    """

    restarts: int = 64
    seed: int = 0
    penalty_weight: float = 1e4
    penalty_rounds: int = 3
    polish_top: int = 4
    screen_maxiter: int = 400
    polish_maxiter: int = 4000
    residual_tol: float = 1e-8
    cost_stability_tol: float = 1e-9
    regularity_eps: float = REGULARITY_EPS


@dataclass(frozen=True)
class OptimizationResult:
    state: np.ndarray
    qfim: SingleSiteQFIM
    cost: float
    commutativity_residual: float
    restarts_used: int
    converged: bool


def _gauge_fix(z):
    """Global phase such that the first amplitude with |z| > 1e-8 is real positive."""
    for zi in z:
        if abs(zi) > 1e-8:
            return z * (zi.conjugate() / abs(zi))
    return z


def _penalized_objective(enc_stack, weight, regularity_eps):
    d = enc_stack.shape[1]

    def obj(x):
        z = x[:d] + 1j * x[d:]
        n = np.linalg.norm(z)
        if n < 1e-12:
            return 1e15
        z = z / n
        means, gram = _gram(z, enc_stack)
        f = 4.0 * (gram.real - np.outer(means, means))
        upper = np.triu(gram.imag, k=1)
        penalty = weight * float(np.sum((2.0 * upper) ** 2))
        det = np.linalg.det(f)
        if det <= regularity_eps:
            return 1e9 + penalty
        return float(np.trace(np.linalg.inv(f))) + penalty

    return obj


def optimize_probe(task, config=None):
    """Find the product-probe state minimizing Tr(f^-1) under weak commutativity.

    Returns an OptimizationResult.  When no restart reaches a state that is
    both constraint-satisfying (residual <= residual_tol) and regular
    (det f > regularity_eps), the task is reported infeasible: cost is the
    SINGULAR sentinel and converged is False (no exception is raised).

    Restart r uses its own RNG stream derived from (seed, r), so results do
    not depend on evaluation order.
    """
    cfg = config or OptimizerConfig()
    d = task.d
    enc_stack = task.encoder_stack()
    nm_opts_screen = dict(maxiter=cfg.screen_maxiter, xatol=1e-9, fatol=1e-11)
    nm_opts_polish = dict(maxiter=cfg.polish_maxiter, xatol=1e-12, fatol=1e-14)

    screen_obj = _penalized_objective(enc_stack, cfg.penalty_weight, cfg.regularity_eps)
    candidates = []
    for r in range(cfg.restarts):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(r,)))
        x0 = rng.normal(size=2 * d)
        res = minimize(screen_obj, x0, method="Nelder-Mead", options=nm_opts_screen)
        candidates.append((res.fun, r, res.x))
    candidates.sort(key=lambda c: c[0])

    best = None  # (cost, residual, z, qf, stable)
    for _, r, x in candidates[: max(1, cfg.polish_top)]:
        prev_cost = None
        stable = False
        for round_idx in range(cfg.penalty_rounds):
            weight = cfg.penalty_weight * 2.0 ** round_idx
            obj = _penalized_objective(enc_stack, weight, cfg.regularity_eps)
            res = minimize(obj, x, method="Nelder-Mead", options=nm_opts_polish)
            x = res.x
            if prev_cost is not None and abs(res.fun - prev_cost) <= cfg.cost_stability_tol:
                stable = True
            prev_cost = res.fun
        z = x[:d] + 1j * x[d:]
        z = _gauge_fix(z / np.linalg.norm(z))
        qf = qfim(z, task)
        residual = commutativity_residual(z, task)
        cost = cost_from_qfim(qf, cfg.regularity_eps)
        feasible = residual <= cfg.residual_tol and cost != SINGULAR
        entry = (cost, residual, z, qf, stable)
        if best is None:
            best = entry
        elif feasible and (best[0] == SINGULAR or best[1] > cfg.residual_tol or cost < best[0]):
            best = entry
        elif best[1] > cfg.residual_tol and residual < best[1]:
            best = entry

    cost, residual, z, qf, stable = best
    feasible = residual <= cfg.residual_tol and cost != SINGULAR
    return OptimizationResult(
        state=z,
        qfim=qf,
        cost=cost if feasible else SINGULAR,
        commutativity_residual=residual,
        restarts_used=cfg.restarts,
        converged=feasible and stable,
    )
