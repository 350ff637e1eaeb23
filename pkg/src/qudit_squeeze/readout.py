"""SLD readout operators, transduction matrices, and squeezing parameters.

From a single-site reference state rho = |phi><phi| the readout directions
are l_a = -i[s_a, rho] and the transduction operators g_{kb} = -i[s_k, l_b].
Collectively, L_a = sum_j l_a^(j) and G_{kb} = sum_j <g_{kb}^(j)>; a state's
estimation variance under this readout is Tr[(G^T)^-1 C G^-1] with C the
covariance matrix of the L_a, and the squeezing parameter normalizes it to
the product-probe optimum:

    xi^2 = N Tr[(G^T)^-1 C G^-1] / Tr(f_opt^-1).

For the in-plane qutrit task the readout quadratures may be rotated,
Q_a(kappa) = cos(kappa) L_a - sin(kappa) S_a, and xi^2_in is minimized over
kappa with G kept at its unrotated value (a flag enables the self-consistent
rotated G for comparison).

Covariances are symmetrized throughout: Cov(A, B) = <AB + BA>/2 - <A><B>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import spin_operators
from .qfim import SensingTask, SingleSiteQFIM

__all__ = [
    "ReadoutSet",
    "SqueezingRecord",
    "InPlaneMoments",
    "build_readout",
    "su2_subalgebra_check",
    "collective_expectations",
    "xi2_general",
    "xi2_kappa_scan",
    "xi2_kappa_from_moments",
    "inplane_moments",
    "wineland_xi2",
    "vector_xi2",
    "records_to_csv",
]

#: |det G| below this multiple of ||G||_F^k flags a singular transduction.
G_SINGULAR_REL = 1e-10

_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class ReadoutSet:
    """Reference density matrix, SLDs, and transduction operators for a task."""

    task: SensingTask
    rho: np.ndarray
    slds: tuple          # l_a = -i[s_a, rho], one per encoder
    transduction: tuple  # transduction[k][b] = -i[s_k, l_b]

    @property
    def k(self):
        return len(self.slds)


@dataclass
class SqueezingRecord:
    """One time point of a squeezing trace."""

    time: float
    C: np.ndarray
    G: np.ndarray
    kappa_opt: float
    xi2: float
    xi2_err: float | None = None


def build_readout(state, task):
    """Construct the ReadoutSet of a (usually optimized) reference state."""
    z = np.asarray(state, dtype=complex).reshape(-1)
    if z.size != task.d:
        raise ValueError(f"state dimension {z.size} does not match task d={task.d}")
    rho = np.outer(z, z.conj())
    enc = task.encoders
    slds = tuple(-1j * (s @ rho - rho @ s) for s in enc)
    transduction = tuple(
        tuple(-1j * (s_k @ l_b - l_b @ s_k) for l_b in slds) for s_k in enc)
    return ReadoutSet(task=task, rho=rho, slds=slds, transduction=transduction)


def su2_subalgebra_check(readout):
    """Residuals of the closed spin-like algebra of (s_a, l_a, g_aa / 2).

    The transduction operator g_aa = -i[s_a, l_a] carries eigenvalues +-2 for
    the in-plane qutrit optimum, so the member of the spin-like triple is the
    halved operator gh = g_aa / 2; with that normalization

        [s_a, l_a] = 2i gh,   [gh, s_a] = 2i l_a,   [l_a, gh] = 2i s_a

    hold exactly.  Returns {axis: (r1, r2, r3)} of max-abs residuals.
    """
    if readout.k != 2:
        raise ValueError("the SU(2) subalgebra check applies to the in-plane task")
    out = {}
    labels = readout.task.labels or "ab"
    for a, (s, l) in enumerate(zip(readout.task.encoders, readout.slds)):
        gh = readout.transduction[a][a] / 2
        r1 = np.max(np.abs((s @ l - l @ s) - 2j * gh))
        r2 = np.max(np.abs((gh @ s - s @ gh) - 2j * l))
        r3 = np.max(np.abs((l @ gh - gh @ l) - 2j * s))
        out[labels[a]] = (float(r1), float(r2), float(r3))
    return out


def _check_state_matches(state, task):
    if state.d != task.d:
        raise ValueError(f"backend local dimension {state.d} does not match task d={task.d}")


def collective_expectations(state, readout):
    """(C, G) on a many-body state: C_ab = Cov(L_a, L_b), G_kb = sum_j <g_kb^(j)>."""
    _check_state_matches(state, readout.task)
    k = readout.k
    vecs = [state.apply_one_body(l) for l in readout.slds]
    means = np.array([np.vdot(state.amps, v).real for v in vecs])
    C = np.empty((k, k))
    for a in range(k):
        for b in range(a, k):
            C[a, b] = C[b, a] = np.vdot(vecs[a], vecs[b]).real - means[a] * means[b]
    G = np.empty((k, k))
    for i in range(k):
        for b in range(k):
            G[i, b] = state.expect_one_body(readout.transduction[i][b]).real
    return C, G


def _g_inverse(G):
    k = G.shape[0]
    det = np.linalg.det(G)
    if abs(det) <= G_SINGULAR_REL * np.linalg.norm(G) ** k:
        return None
    return np.linalg.inv(G)


def xi2_general(C, G, f_opt, N):
    """xi^2 = N Tr[(G^T)^-1 C G^-1] / Tr(f_opt^-1); inf on singular G."""
    C = np.asarray(C, dtype=float)
    G = np.asarray(G, dtype=float)
    f = f_opt.f if isinstance(f_opt, SingleSiteQFIM) else np.asarray(f_opt, dtype=float)
    Gi = _g_inverse(G)
    if Gi is None:
        return math.inf
    var_theta = float(np.trace(Gi.T @ C @ Gi))
    return N * var_theta / float(np.trace(np.linalg.inv(f)))


@dataclass
class InPlaneMoments:
    """First and symmetrized second moments of (L_x, L_y, S_x, S_y) plus G.

    This is the meeting point of the exact backends and the trajectory
    estimator: both reduce a many-body state (or ensemble) to these numbers,
    and the kappa scan below consumes nothing else.  sz_mean feeds the
    optional rotated-transduction variant.
    """

    mean: np.ndarray   # (4,)
    sym2: np.ndarray   # (4, 4), <AB + BA>/2
    G: np.ndarray      # (2, 2)
    sz_mean: float = 0.0

    def covariance(self):
        return self.sym2 - np.outer(self.mean, self.mean)


def inplane_moments(state, readout):
    """Exact InPlaneMoments of a backend state for the d=3 in-plane task."""
    _check_state_matches(state, readout.task)
    if readout.k != 2:
        raise ValueError("in-plane moments require a two-encoder task")
    sx, sy, sz = spin_operators(readout.task.d)
    ops = [readout.slds[0], readout.slds[1], sx, sy]
    vecs = [state.apply_one_body(op) for op in ops]
    mean = np.array([np.vdot(state.amps, v).real for v in vecs])
    sym2 = np.empty((4, 4))
    for a in range(4):
        for b in range(a, 4):
            sym2[a, b] = sym2[b, a] = np.vdot(vecs[a], vecs[b]).real
    G = np.empty((2, 2))
    for i in range(2):
        for b in range(2):
            G[i, b] = state.expect_one_body(readout.transduction[i][b]).real
    return InPlaneMoments(mean=mean, sym2=sym2, G=G,
                          sz_mean=state.expect_one_body(sz).real)


def _xi2_of_kappa(kappa, cov, G, N, sz_mean, rotate_transduction):
    ck, sk = np.cos(kappa), np.sin(kappa)
    R = np.array([[ck, 0.0, -sk, 0.0], [0.0, ck, 0.0, -sk]])
    Ck = R @ cov @ R.T
    Gk = G
    if rotate_transduction:
        # -i[S_k, S_b] expectation contributes [[0, Sz], [-Sz, 0]]
        Gk = ck * G - sk * np.array([[0.0, sz_mean], [-sz_mean, 0.0]])
    Gi = _g_inverse(Gk)
    if Gi is None:
        return math.inf
    return 2.0 * N * float(np.trace(Gi.T @ Ck @ Gi))


def xi2_kappa_from_moments(moments, N, n_grid=256, refine_tol=1e-6,
                           rotate_transduction=False):
    """(kappa_opt, xi2_in) minimized over the rotated quadratures.

    A uniform n_grid scan over [0, 2pi) brackets the minimum, then
    golden-section refinement narrows kappa to refine_tol radians.
    """
    cov = moments.covariance()
    G = moments.G
    sz = moments.sz_mean
    grid = np.linspace(0.0, 2.0 * np.pi, n_grid, endpoint=False)
    vals = np.array([_xi2_of_kappa(k, cov, G, N, sz, rotate_transduction)
                     for k in grid])
    if not np.any(np.isfinite(vals)):
        return 0.0, math.inf
    i0 = int(np.argmin(vals))
    best_k, best_v = float(grid[i0]), float(vals[i0])

    def f(k):
        nonlocal best_k, best_v
        v = _xi2_of_kappa(k, cov, G, N, sz, rotate_transduction)
        if v < best_v:
            best_k, best_v = float(k), float(v)
        return v

    step = grid[1] - grid[0]
    a, b = grid[i0] - step, grid[i0] + step
    c = b - _GOLDEN * (b - a)
    d_ = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d_)
    while b - a > refine_tol:
        if fc < fd:
            b, d_, fd = d_, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + _GOLDEN * (b - a)
            fd = f(d_)
    f((a + b) / 2)
    return float(best_k % (2.0 * np.pi)), best_v


def xi2_kappa_scan(state, readout, n_grid=256, refine_tol=1e-6,
                   rotate_transduction=False):
    """In-plane squeezing parameter of a backend state, minimized over kappa."""
    m = inplane_moments(state, readout)
    return xi2_kappa_from_moments(m, state.N, n_grid=n_grid,
                                  refine_tol=refine_tol,
                                  rotate_transduction=rotate_transduction)


def wineland_xi2(state, N=None):
    """Scalar-task squeezing parameter N (Delta S_y)^2 / <S_z>^2.

    The reference direction is the +z polarized product state; inf is
    returned when the polarization <S_z> vanishes.
    """
    N = state.N if N is None else N
    _, sy, sz = spin_operators(state.d)
    vy = state.apply_one_body(sy)
    my = np.vdot(state.amps, vy).real
    var_y = np.vdot(vy, vy).real - my * my
    mz = state.expect_one_body(sz).real
    if abs(mz) < 1e-9 * N:
        return math.inf
    return N * var_y / mz ** 2


def vector_xi2(state, readout, N=None):
    """Vector-field squeezing parameter (8N/3) Tr[(G^T)^-1 C G^-1]."""
    if readout.k != 3:
        raise ValueError("vector squeezing requires a three-encoder task")
    N = state.N if N is None else N
    C, G = collective_expectations(state, readout)
    Gi = _g_inverse(G)
    if Gi is None:
        return math.inf
    return (8.0 * N / 3.0) * float(np.trace(Gi.T @ C @ Gi))


#: schema version written into the CSV header comment
_CSV_SCHEMA = "squeezing-trace-v1"


def records_to_csv(records, path, k=None):
    """Write SqueezingRecord rows as CSV.

    Columns: time, xi2, kappa_opt, C row-major (k*k columns), G diagonal
    (k columns); an xi2_err column is appended after xi2 when any record
    carries error bars.  A header comment line pins the schema.
    """
    if not records:
        raise ValueError("no records to write")
    k = records[0].C.shape[0] if k is None else k
    with_err = any(r.xi2_err is not None for r in records)
    cols = ["time", "xi2"] + (["xi2_err"] if with_err else []) + ["kappa_opt"]
    cols += [f"C{a}{b}" for a in range(k) for b in range(k)]
    cols += [f"G{a}{a}" for a in range(k)]
    lines = [f"# schema: {_CSV_SCHEMA}", ",".join(cols)]
    for r in records:
        row = [f"{r.time:.12g}", f"{r.xi2:.12g}"]
        if with_err:
            row.append(f"{(r.xi2_err if r.xi2_err is not None else float('nan')):.12g}")
        row.append(f"{r.kappa_opt:.12g}")
        row += [f"{x:.12g}" for x in np.asarray(r.C).reshape(-1)]
        row += [f"{x:.12g}" for x in np.diag(np.asarray(r.G))]
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
