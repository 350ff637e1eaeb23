"""Generalized discrete truncated Wigner approximation for qudit chains.

Each site carries a generalized Bloch vector v of generator expectation
values.  The initial product state is sampled generator by generator: for
every site and every generator, an eigenvalue of that generator is drawn
with the Born probability of the single-site state, so all first moments and
the same-site diagonal second moments are reproduced exactly on average.
Trajectories then follow the factorized mean-field equations

    dv_a^(j)/dt = 2 sum_{bc} f_abc B_b^(j) v_c^(j),

where f are the structure constants and B^(j) collects the exact on-site
field (every on-site Hamiltonian is linear in the generators) plus the
partner sum of the two-body couplings under <A^(i) B^(j)> -> <A><B> for
i != j.  Integration is fixed-step RK4.

Collective second moments are estimated from distinct-site products only;
the same-site parts are evaluated exactly through the generator expansion of
the symmetrized single-site products.  Error bars are leave-one-out
jackknife over trajectories.

Trajectory seeds derive from the master seed through the splitmix64 mixing
function, fixing each trajectory's stream independently of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import expand_in_basis, gellmann_basis, spin_operators, structure_constants
from .dynamics import coupling_table
from .readout import InPlaneMoments, SqueezingRecord, xi2_kappa_from_moments

__all__ = [
    "GdtwaConfig",
    "GdtwaResult",
    "mix64",
    "sample_initial",
    "meanfield_rhs",
    "run_gdtwa",
]

_MASK = (1 << 64) - 1
_GOLDEN64 = 0x9E3779B97F4A7C15


def mix64(master_seed, index):
    """splitmix64 of (master_seed advanced by index + 1 golden increments).

    This is the documented per-trajectory seed derivation: trajectory i uses
    numpy's PCG64 seeded with mix64(master_seed, i).
    """
    x = (int(master_seed) + (int(index) + 1) * _GOLDEN64) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


@dataclass(frozen=True)
class GdtwaConfig:
    """Trajectory count, seeding, step size, and output grid.

    dt and t_out are in units of 1/J0; every output time must sit on the
    fixed RK4 step grid.  When validate_dt is set, a probe subset of
    trajectories is rerun with dt/2 and the run is rejected if xi^2 moves by
    more than dt_check_tol relatively.
    """

    n_traj: int
    master_seed: int
    dt: float
    t_out: tuple
    integrator: str = "RK4"
    validate_dt: bool = True
    probe_traj: int = 200
    dt_check_tol: float = 1e-3
    jackknife: bool = True
    jackknife_grid: int = 128

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.integrator != "RK4":
            raise ValueError(f"unsupported integrator {self.integrator!r}")
        if len(self.t_out) == 0:
            raise ValueError("t_out must contain at least one time")


@dataclass
class GdtwaResult:
    records: list
    sz_mean: np.ndarray   # trajectory-averaged sum_j <s_z>_j at each output time
    n_traj: int
    dt: float


def sample_initial(state, N, n_traj, master_seed, basis=None):
    """Discrete Wigner sample of |phi>^{tensor N}: array (n_traj, N, d^2-1).

    For each site and generator index a independently, an eigenvalue of
    lambda_a is drawn with probability <phi|P_{a,m}|phi>.
    """
    phi = np.asarray(state, dtype=complex).reshape(-1)
    d = phi.size
    basis = basis or gellmann_basis(d)
    ngen = len(basis)
    eigvals, cums = [], []
    for lam in basis.generators:
        w, vecs = np.linalg.eigh(lam)
        probs = np.abs(vecs.conj().T @ phi) ** 2
        eigvals.append(w)
        cums.append(np.cumsum(probs))
    v = np.empty((n_traj, N, ngen))
    for i in range(n_traj):
        rng = np.random.default_rng(mix64(master_seed, i))
        u = rng.random((N, ngen))
        for a in range(ngen):
            idx = np.minimum(np.searchsorted(cums[a], u[:, a], side="right"),
                             d - 1)
            v[i, :, a] = eigvals[a][idx]
    return v


@dataclass
class _CompiledXY:
    """Generator-basis expansion of an XY spec, ready for the RHS.

    The mean field at site j is B^j = eta + P_j cx + Q_j cy with scalars
    P_j = sum_i J_ij <s_x>_i and Q_j likewise for s_y, so the contraction
    dv_a = 2 sum_bc f_abc B_b v_c collapses to three fixed generator-space
    matrices F. = sum_b (coef_b) 2 f[:, b, :]:

        dv = v @ F0^T + P * (v @ Fx^T) + Q * (v @ Fy^T).
    """

    J: np.ndarray
    cx: np.ndarray
    cy: np.ndarray
    F0: np.ndarray
    Fx: np.ndarray
    Fy: np.ndarray
    ngen: int


def _compile_xy(spec, d, N, basis, structure):
    if spec.variant != "XY":
        raise ValueError("the mean-field equations are compiled from an XY spec")
    sx, sy, sz = spin_operators(d)
    cx, _ = expand_in_basis(sx, basis)
    cy, _ = expand_in_basis(sy, basis)
    eta, _ = expand_in_basis(-spec.V0 * (sz @ sz), basis)
    J = coupling_table(N, spec.J0, spec.gamma)
    f2 = 2.0 * structure.f
    F0 = np.ascontiguousarray(np.einsum("b,abc->ca", eta, f2))
    Fx = np.ascontiguousarray(np.einsum("b,abc->ca", cx, f2))
    Fy = np.ascontiguousarray(np.einsum("b,abc->ca", cy, f2))
    return _CompiledXY(J=J, cx=cx, cy=cy, F0=F0, Fx=Fx, Fy=Fy, ngen=len(basis))


def _rhs(v, comp):
    """dv/dt for phase points v of shape (..., N, ngen)."""
    P = (v @ comp.cx) @ comp.J
    Q = (v @ comp.cy) @ comp.J
    return v @ comp.F0 + P[..., None] * (v @ comp.Fx) + Q[..., None] * (v @ comp.Fy)


def meanfield_rhs(v, spec, structure=None, basis=None):
    """Public single-call RHS: v has shape (N, d^2-1) or (..., N, d^2-1)."""
    v = np.asarray(v, dtype=float)
    ngen = v.shape[-1]
    d = int(round(np.sqrt(ngen + 1)))
    basis = basis or gellmann_basis(d)
    structure = structure or structure_constants(basis)
    comp = _compile_xy(spec, d, v.shape[-2], basis, structure)
    return _rhs(v, comp)


def _rk4_step(v, dt, comp):
    k1 = _rhs(v, comp)
    k2 = _rhs(v + (dt / 2) * k1, comp)
    k3 = _rhs(v + (dt / 2) * k2, comp)
    k4 = _rhs(v + dt * k3, comp)
    return v + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class _MomentPlan:
    """Generator expansions of the in-plane observables and corrections."""

    w_ops: np.ndarray    # (ngen, 4): columns l_x, l_y, s_x, s_y
    q_id: np.ndarray     # (4, 4) identity parts of symmetrized products
    q_coef: np.ndarray   # (4, 4, ngen)
    g_id: np.ndarray     # (2, 2)
    g_coef: np.ndarray   # (2, 2, ngen)
    w_sz: np.ndarray     # (ngen,)
    sz_id: float


def _compile_moments(readout, basis):
    d = readout.task.d
    sx, sy, sz = spin_operators(d)
    ops = [readout.slds[0], readout.slds[1], sx, sy]
    ngen = len(basis)
    w_ops = np.zeros((ngen, 4))
    for c, op in enumerate(ops):
        coef, ident = expand_in_basis(op, basis)
        w_ops[:, c] = coef
        if abs(ident) > 1e-12:
            raise ValueError("in-plane observables are expected traceless")
    q_id = np.zeros((4, 4))
    q_coef = np.zeros((4, 4, ngen))
    for a in range(4):
        for b in range(a, 4):
            q = (ops[a] @ ops[b] + ops[b] @ ops[a]) / 2
            coef, ident = expand_in_basis(q, basis)
            q_coef[a, b] = q_coef[b, a] = coef
            q_id[a, b] = q_id[b, a] = ident
    g_id = np.zeros((2, 2))
    g_coef = np.zeros((2, 2, ngen))
    for i in range(2):
        for b in range(2):
            coef, ident = expand_in_basis(readout.transduction[i][b], basis)
            g_coef[i, b] = coef
            g_id[i, b] = ident
    w_sz, sz_id = expand_in_basis(sz, basis)
    return _MomentPlan(w_ops=w_ops, q_id=q_id, q_coef=q_coef, g_id=g_id,
                       g_coef=g_coef, w_sz=w_sz, sz_id=float(sz_id))


def _reduce(v, plan, N):
    """Per-trajectory sums feeding the moment estimator.

    Returns (A, M, G, sz): A (T, 4) collective first moments; M (T, 4, 4)
    symmetrized second moments (distinct-site products plus exact same-site
    corrections); G (T, 2, 2); sz (T,).
    """
    x = v @ plan.w_ops                       # (T, N, 4)
    A = x.sum(axis=1)                        # (T, 4)
    self_prod = np.einsum("tna,tnb->tab", x, x)
    vsum = v.sum(axis=1)                     # (T, ngen)
    same = N * plan.q_id + np.einsum("tg,abg->tab", vsum, plan.q_coef)
    M = A[:, :, None] * A[:, None, :] - self_prod + same
    G = N * plan.g_id + np.einsum("tg,ibg->tib", vsum, plan.g_coef)
    sz = vsum @ plan.w_sz + N * plan.sz_id
    return A, M, G, sz


def _jackknife_xi2(A, M, G, N, n_grid):
    """Leave-one-out jackknife standard error of the kappa-minimized xi^2."""
    T = A.shape[0]
    if T < 2:
        return float("nan")
    mean_loo = (A.sum(axis=0) - A) / (T - 1)            # (T, 4)
    sym2_loo = (M.sum(axis=0) - M) / (T - 1)            # (T, 4, 4)
    G_loo = (G.sum(axis=0) - G) / (T - 1)               # (T, 2, 2)
    cov = sym2_loo - mean_loo[:, :, None] * mean_loo[:, None, :]
    grid = np.linspace(0.0, 2.0 * np.pi, n_grid, endpoint=False)
    ck, sk = np.cos(grid), np.sin(grid)
    R = np.zeros((n_grid, 2, 4))
    R[:, 0, 0] = ck
    R[:, 0, 2] = -sk
    R[:, 1, 1] = ck
    R[:, 1, 3] = -sk
    Ck = np.einsum("kap,tpq,kbq->tkab", R, cov, R)
    det = G_loo[:, 0, 0] * G_loo[:, 1, 1] - G_loo[:, 0, 1] * G_loo[:, 1, 0]
    bad = np.abs(det) < 1e-300
    det = np.where(bad, 1.0, det)
    Gi = np.empty_like(G_loo)
    Gi[:, 0, 0] = G_loo[:, 1, 1] / det
    Gi[:, 1, 1] = G_loo[:, 0, 0] / det
    Gi[:, 0, 1] = -G_loo[:, 0, 1] / det
    Gi[:, 1, 0] = -G_loo[:, 1, 0] / det
    mid = np.einsum("tba,tkbc,tcd->tkad", Gi, Ck, Gi)
    vals = 2.0 * N * (mid[:, :, 0, 0] + mid[:, :, 1, 1])
    xi = vals.min(axis=1)
    xi = np.where(bad, np.nan, xi)
    if np.any(~np.isfinite(xi)):
        return float("nan")
    xbar = xi.mean()
    return float(np.sqrt((T - 1) / T * np.sum((xi - xbar) ** 2)))


def _integrate(v, comp, plan, N, dt, t_out, collect):
    out = []
    t = 0.0
    for tk in t_out:
        n_steps = int(round((tk - t) / dt))
        if abs(t + n_steps * dt - tk) > 1e-9 * max(1.0, abs(tk)):
            raise ValueError(
                f"output time {tk} is not on the dt={dt} step grid")
        for _ in range(n_steps):
            v = _rk4_step(v, dt, comp)
        t = tk
        out.append(collect(v))
    return out


def _point_estimates(A, M, G, N, sz):
    mean = A.mean(axis=0)
    sym2 = M.mean(axis=0)
    Gm = G.mean(axis=0)
    moments = InPlaneMoments(mean=mean, sym2=sym2, G=Gm, sz_mean=float(sz.mean()))
    return moments


def run_gdtwa(config, spec, probe, readout, N):
    """Trajectory simulation of the in-plane squeezing dynamics for N sites.

    Returns a GdtwaResult whose records carry jackknife error bars.  The
    mandatory dt validation integrates a probe subset at dt and dt/2 and
    rejects the step size when xi^2 moves by more than config.dt_check_tol.
    """
    if readout.k != 2:
        raise ValueError("run_gdtwa estimates the in-plane (two-encoder) task")
    phi = np.asarray(probe, dtype=complex).reshape(-1)
    d = phi.size
    if d != readout.task.d:
        raise ValueError("probe dimension does not match the readout task")
    t_out = tuple(float(t) for t in config.t_out)
    if any(t < 0 for t in t_out) or any(b <= a for a, b in zip(t_out, t_out[1:])):
        raise ValueError("t_out must be nonnegative and strictly increasing")

    basis = gellmann_basis(d)
    structure = structure_constants(basis)
    plan = _compile_moments(readout, basis)
    comp = _compile_xy(spec, d, N, basis, structure)
    collect = lambda v: _reduce(v, plan, N)

    if config.validate_dt:
        n_probe = min(config.probe_traj, config.n_traj)
        v0 = sample_initial(phi, N, n_probe, config.master_seed, basis)
        coarse = _integrate(v0, comp, plan, N, config.dt, t_out, collect)
        fine = _integrate(v0, comp, plan, N, config.dt / 2, t_out, collect)
        worst = 0.0
        for (Ac, Mc, Gc, szc), (Af, Mf, Gf, szf) in zip(coarse, fine):
            _, xc = xi2_kappa_from_moments(_point_estimates(Ac, Mc, Gc, N, szc), N)
            _, xf = xi2_kappa_from_moments(_point_estimates(Af, Mf, Gf, N, szf), N)
            if np.isfinite(xc) and np.isfinite(xf):
                worst = max(worst, abs(xc - xf) / max(abs(xf), 1e-12))
        if worst > config.dt_check_tol:
            raise ValueError(
                f"dt={config.dt} rejected: halving it moves xi^2 by {worst:.2e} "
                f"(tolerance {config.dt_check_tol})")

    v0 = sample_initial(phi, N, config.n_traj, config.master_seed, basis)
    reduced = _integrate(v0, comp, plan, N, config.dt, t_out, collect)

    records = []
    sz_means = []
    for tk, (A, M, G, sz) in zip(t_out, reduced):
        moments = _point_estimates(A, M, G, N, sz)
        kappa, xi2 = xi2_kappa_from_moments(moments, N)
        err = (_jackknife_xi2(A, M, G, N, config.jackknife_grid)
               if config.jackknife else None)
        records.append(SqueezingRecord(time=tk, C=moments.covariance()[:2, :2],
                                       G=moments.G, kappa_opt=kappa, xi2=xi2,
                                       xi2_err=err))
        sz_means.append(sz.mean())
    return GdtwaResult(records=records, sz_mean=np.array(sz_means),
                       n_traj=config.n_traj, dt=config.dt)
