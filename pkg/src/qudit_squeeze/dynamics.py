"""Exact N-qudit ensemble dynamics on two backends.

DENSE keeps the full d^N amplitude vector and supports arbitrary site-resolved
Hamiltonians; operators are never materialized, every term is applied by
tensor contraction.  SYMMETRIC works in the permutation-symmetric sector,
dimension C(N+d-1, d-1), using the occupation-number representation: the
collective one-body operator sum_j |mu><nu|^(j) acts as b+_mu b_nu on
(n_1..n_d), so collective quadratic Hamiltonians are short products of sparse
matrices.  That makes N of a few hundred exact for twisting Hamiltonians.

Both state classes expose the same small surface consumed by the readout
module: apply_one_body, expect_one_body, and product_state construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import lgamma

import numpy as np
import scipy.sparse as sp

from .algebra import spin_operators
from .krylov import StepControllerError, expm_apply

__all__ = [
    "HamiltonianSpec",
    "DenseSpace",
    "DenseState",
    "SymmetricSpace",
    "SymmetricState",
    "SymmetricHamiltonian",
    "DenseHamiltonian",
    "build_hamiltonian",
    "evolve",
    "product_state",
    "save_snapshot",
    "load_snapshot",
]

DENSE_AMPLITUDE_LIMIT = 2_000_000
_DENSE_MATERIALIZE_LIMIT = 4096


@dataclass(frozen=True)
class HamiltonianSpec:
    """Tagged Hamiltonian description.

    OAT:  H = -chi (S_x^2 + S_y^2)
    TAT:  H = -chi sum_a (S_a L_a + L_a S_a), a over the readout task axes
    XY:   H = sum_{i<j} J0/|i-j|^gamma (s_x s_x + s_y s_y) - V0 sum_j s_z^2,
          open chain, distances in lattice units
    CUSTOM: explicit (site-support, operator) terms, dense backend only
    """

    variant: str
    chi: float | None = None
    J0: float | None = None
    gamma: float | None = None
    V0: float | None = None
    custom: tuple = ()

    def __post_init__(self):
        if self.variant in ("OAT", "TAT"):
            if self.chi is None:
                raise ValueError(f"{self.variant} requires chi")
            if any(v is not None for v in (self.J0, self.gamma, self.V0)) or self.custom:
                raise ValueError(f"{self.variant} takes only chi")
        elif self.variant == "XY":
            if self.J0 is None or self.gamma is None or self.V0 is None:
                raise ValueError("XY requires J0, gamma, V0")
            if self.gamma < 0:
                raise ValueError("gamma must be >= 0")
            if self.chi is not None or self.custom:
                raise ValueError("XY takes only J0, gamma, V0")
        elif self.variant == "CUSTOM":
            if not self.custom:
                raise ValueError("CUSTOM requires at least one term")
            if any(v is not None for v in (self.chi, self.J0, self.gamma, self.V0)):
                raise ValueError("CUSTOM takes only explicit terms")
        else:
            raise ValueError(f"unknown Hamiltonian variant {self.variant!r}")

    @classmethod
    def oat(cls, chi):
        return cls(variant="OAT", chi=chi)

    @classmethod
    def tat(cls, chi):
        return cls(variant="TAT", chi=chi)

    @classmethod
    def xy(cls, J0, gamma, V0):
        return cls(variant="XY", J0=J0, gamma=gamma, V0=V0)

    @classmethod
    def custom_terms(cls, terms):
        terms = tuple((tuple(sites), np.asarray(op, dtype=complex)) for sites, op in terms)
        return cls(variant="CUSTOM", custom=terms)


def coupling_table(N, J0, gamma):
    """Open-chain power-law couplings J[i, j] = J0 / |i-j|^gamma, zero diagonal."""
    idx = np.arange(N)
    dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
    with np.errstate(divide="ignore"):
        J = J0 / dist ** gamma
    np.fill_diagonal(J, 0.0)
    return J


# ---------------------------------------------------------------------------
# dense backend
# ---------------------------------------------------------------------------

class DenseSpace:
    """Full tensor-product space of N sites with local dimension d."""

    backend = "DENSE"

    def __init__(self, N, d):
        if N < 1:
            raise ValueError("N must be >= 1")
        if d ** N > DENSE_AMPLITUDE_LIMIT:
            raise ValueError(
                f"d^N = {d ** N} exceeds the dense limit of {DENSE_AMPLITUDE_LIMIT}")
        self.N = int(N)
        self.d = int(d)
        self.dim = d ** N

    def product_state(self, phi, t=0.0):
        phi = np.asarray(phi, dtype=complex).reshape(-1)
        if phi.size != self.d:
            raise ValueError(f"single-site state has dimension {phi.size}, expected {self.d}")
        amps = phi
        for _ in range(self.N - 1):
            amps = np.kron(amps, phi)
        return DenseState(self, amps, t)

    def state(self, amps, t=0.0):
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        if amps.size != self.dim:
            raise ValueError(f"amplitude count {amps.size} does not match dim {self.dim}")
        return DenseState(self, amps, t)


class DenseState:
    backend = "DENSE"

    def __init__(self, space, amps, t=0.0):
        self.space = space
        self.amps = np.asarray(amps, dtype=complex).reshape(-1)
        self.t = float(t)

    @property
    def N(self):
        return self.space.N

    @property
    def d(self):
        return self.space.d

    def _apply_site(self, op, j, amps=None):
        a = (self.amps if amps is None else amps).reshape((self.d,) * self.N)
        out = np.tensordot(op, a, axes=([1], [j]))
        return np.moveaxis(out, 0, j).reshape(-1)

    def apply_site(self, op, j):
        """Amplitudes of op^(j) |psi>."""
        return self._apply_site(np.asarray(op, dtype=complex), j)

    def apply_one_body(self, op):
        """Amplitudes of (sum_j op^(j)) |psi>."""
        op = np.asarray(op, dtype=complex)
        out = self._apply_site(op, 0)
        for j in range(1, self.N):
            out += self._apply_site(op, j)
        return out

    def expect_one_body(self, op):
        return np.vdot(self.amps, self.apply_one_body(op))

    def swap_sites(self, i, j):
        a = self.amps.reshape((self.d,) * self.N)
        return DenseState(self.space, np.swapaxes(a, i, j).reshape(-1), self.t)

    def norm(self):
        return float(np.linalg.norm(self.amps))


# ---------------------------------------------------------------------------
# symmetric-subspace backend
# ---------------------------------------------------------------------------

def _occupation_basis(N, d):
    """All (n_1..n_d) with sum N, ordered lexicographically descending in n_1."""
    occs = []
    def rec(prefix, remaining, slots):
        if slots == 1:
            occs.append(prefix + (remaining,))
            return
        for n in range(remaining, -1, -1):
            rec(prefix + (n,), remaining - n, slots - 1)
    rec((), N, d)
    return np.array(occs, dtype=np.int64)


class SymmetricSpace:
    """Permutation-symmetric sector in the occupation-number representation."""

    backend = "SYMMETRIC"

    def __init__(self, N, d):
        if N < 1:
            raise ValueError("N must be >= 1")
        self.N = int(N)
        self.d = int(d)
        self.occupations = _occupation_basis(N, d)
        self.dim = self.occupations.shape[0]
        self._index = {tuple(row): i for i, row in enumerate(self.occupations)}
        self._one_body_cache = {}

    def collective_matrix(self, op):
        """Sparse matrix of sum_j op^(j) on the occupation basis.

        op_{mu nu} |mu><nu| maps (n) to (n + e_mu - e_nu) with bosonic matrix
        element sqrt((n_mu + 1) n_nu); diagonal entries contribute
        op_{mu mu} n_mu.
        """
        op = np.asarray(op, dtype=complex)
        if op.shape != (self.d, self.d):
            raise ValueError(f"operator shape {op.shape} does not match d={self.d}")
        key = op.tobytes()
        hit = self._one_body_cache.get(key)
        if hit is not None:
            return hit
        occ = self.occupations
        rows, cols, vals = [], [], []
        diag = occ.astype(float) @ np.real_if_close(np.diag(op))
        rows.extend(range(self.dim))
        cols.extend(range(self.dim))
        vals.extend(diag)
        index = self._index
        for mu in range(self.d):
            for nu in range(self.d):
                if mu == nu or op[mu, nu] == 0:
                    continue
                amp = op[mu, nu]
                has = np.nonzero(occ[:, nu] > 0)[0]
                for i in has:
                    n = occ[i]
                    target = list(n)
                    target[mu] += 1
                    target[nu] -= 1
                    jdx = index[tuple(target)]
                    rows.append(jdx)
                    cols.append(i)
                    vals.append(amp * np.sqrt((n[mu] + 1) * n[nu]))
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(self.dim, self.dim), dtype=complex)
        self._one_body_cache[key] = mat
        return mat

    def product_state(self, phi, t=0.0):
        """|phi>^{tensor N} expressed on the occupation basis."""
        phi = np.asarray(phi, dtype=complex).reshape(-1)
        if phi.size != self.d:
            raise ValueError(f"single-site state has dimension {phi.size}, expected {self.d}")
        occ = self.occupations
        amps = np.zeros(self.dim, dtype=complex)
        logmag = np.where(np.abs(phi) > 0, np.log(np.abs(phi), where=np.abs(phi) > 0), 0.0)
        phase = np.where(np.abs(phi) > 0, phi / np.where(np.abs(phi) > 0, np.abs(phi), 1.0), 1.0)
        log_N_fact = lgamma(self.N + 1)
        for i, n in enumerate(occ):
            if np.any((np.abs(phi) == 0) & (n > 0)):
                continue
            log_multinom = log_N_fact - sum(lgamma(int(nk) + 1) for nk in n)
            mag = np.exp(0.5 * log_multinom + float(n @ logmag))
            amps[i] = mag * np.prod(phase ** n)
        return SymmetricState(self, amps, t)

    def state(self, amps, t=0.0):
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        if amps.size != self.dim:
            raise ValueError(f"amplitude count {amps.size} does not match dim {self.dim}")
        return SymmetricState(self, amps, t)


class SymmetricState:
    backend = "SYMMETRIC"

    def __init__(self, space, amps, t=0.0):
        self.space = space
        self.amps = np.asarray(amps, dtype=complex).reshape(-1)
        self.t = float(t)

    @property
    def N(self):
        return self.space.N

    @property
    def d(self):
        return self.space.d

    def apply_one_body(self, op):
        return self.space.collective_matrix(op) @ self.amps

    def expect_one_body(self, op):
        return np.vdot(self.amps, self.apply_one_body(op))

    def norm(self):
        return float(np.linalg.norm(self.amps))


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

class SymmetricHamiltonian:
    """Sum of scalar-weighted products of collective sparse matrices.

    The term products are summed into one CSR matrix on first use; a single
    sparse matvec per Krylov iteration is substantially faster than applying
    the factors one by one.
    """

    def __init__(self, space, terms):
        self.space = space
        self.terms = [(complex(c), tuple(mats)) for c, mats in terms]
        self._matrix = None

    def to_matrix(self):
        if self._matrix is None:
            total = sp.csr_matrix((self.space.dim, self.space.dim), dtype=complex)
            for c, mats in self.terms:
                prod = mats[0]
                for m in mats[1:]:
                    prod = prod @ m
                total = total + c * prod
            total.sum_duplicates()
            self._matrix = total.tocsr()
        return self._matrix

    def matvec(self, v):
        return self.to_matrix() @ v

    def expectation(self, state):
        return np.vdot(state.amps, self.matvec(state.amps))


class DenseHamiltonian:
    """Structured term list applied lazily to dense amplitude vectors.

    one_body: (coef, a)      -> coef * sum_j a^(j)
    quad:     (coef, a, b)   -> coef * (sum_i a^(i)) (sum_j b^(j))
    pair:     (J, a)         -> sum_{i<j} J[i,j] a^(i) a^(j)
    site:     (coef, a, j)   -> coef * a^(j)
    two_site: (coef, ab, (i, j)) -> coef * (d^2 x d^2 operator on sites i, j)
    """

    def __init__(self, space, one_body=(), quad=(), pair=(), site=(), two_site=()):
        self.space = space
        self.one_body = [(complex(c), np.asarray(a, dtype=complex)) for c, a in one_body]
        self.quad = [(complex(c), np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
                     for c, a, b in quad]
        self.pair = [(np.asarray(J, dtype=float), np.asarray(a, dtype=complex))
                     for J, a in pair]
        self.site = [(complex(c), np.asarray(a, dtype=complex), int(j)) for c, a, j in site]
        self.two_site = [(complex(c), np.asarray(ab, dtype=complex), (int(i), int(j)))
                         for c, ab, (i, j) in two_site]

    def matvec(self, v):
        st = DenseState(self.space, v)
        out = np.zeros_like(v)
        for c, a in self.one_body:
            out += c * st.apply_one_body(a)
        for c, a, b in self.quad:
            mid = DenseState(self.space, st.apply_one_body(b))
            out += c * mid.apply_one_body(a)
        for J, a in self.pair:
            N = self.space.N
            u = np.stack([st.apply_site(a, j) for j in range(N)])
            w = J @ u  # w_i = sum_j J_ij a^(j) |psi>
            acc = np.zeros_like(v)
            for i in range(N):
                acc += DenseState(self.space, w[i]).apply_site(a, i)
            out += 0.5 * acc
        for c, a, j in self.site:
            out += c * st.apply_site(a, j)
        for c, ab, (i, j) in self.two_site:
            out += c * _apply_two_site(self.space, v, ab, i, j)
        return out

    def to_matrix(self):
        if self.space.dim > _DENSE_MATERIALIZE_LIMIT:
            raise ValueError(
                f"refusing to materialize a {self.space.dim}-dimensional dense Hamiltonian")
        cols = []
        for k in range(self.space.dim):
            e = np.zeros(self.space.dim, dtype=complex)
            e[k] = 1.0
            cols.append(self.matvec(e))
        return np.stack(cols, axis=1)

    def expectation(self, state):
        return np.vdot(state.amps, self.matvec(state.amps))


def _apply_two_site(space, amps, ab, i, j):
    d, N = space.d, space.N
    a = amps.reshape((d,) * N)
    a = np.moveaxis(a, (i, j), (0, 1)).reshape(d * d, -1)
    out = (ab @ a).reshape((d, d) + (d,) * (N - 2))
    return np.moveaxis(out, (0, 1), (i, j)).reshape(-1)


def build_hamiltonian(spec, space, readout=None):
    """Assemble the backend representation of a HamiltonianSpec.

    TAT needs the readout set for its SLD operators.  XY with gamma > 0 is
    site-resolved and therefore dense-only; gamma = 0 is accepted on the
    symmetric backend as the all-to-all chain.
    """
    d = space.d
    sx, sy, sz = spin_operators(d)
    dense = isinstance(space, DenseSpace)

    if spec.variant == "OAT":
        chi = spec.chi
        if dense:
            return DenseHamiltonian(space, quad=[(-chi, sx, sx), (-chi, sy, sy)])
        Sx, Sy = space.collective_matrix(sx), space.collective_matrix(sy)
        return SymmetricHamiltonian(space, [(-chi, (Sx, Sx)), (-chi, (Sy, Sy))])

    if spec.variant == "TAT":
        if readout is None:
            raise ValueError("TAT requires a ReadoutSet for its SLD operators")
        chi = spec.chi
        pairs = list(zip(readout.task.encoders, readout.slds))
        if dense:
            quad = []
            for s_a, l_a in pairs:
                quad.append((-chi, s_a, l_a))
                quad.append((-chi, l_a, s_a))
            return DenseHamiltonian(space, quad=quad)
        terms = []
        for s_a, l_a in pairs:
            S = space.collective_matrix(s_a)
            L = space.collective_matrix(l_a)
            terms.append((-chi, (S, L)))
            terms.append((-chi, (L, S)))
        return SymmetricHamiltonian(space, terms)

    if spec.variant == "XY":
        if dense:
            J = coupling_table(space.N, spec.J0, spec.gamma)
            return DenseHamiltonian(
                space,
                pair=[(J, sx), (J, sy)],
                one_body=[(-spec.V0, sz @ sz)],
            )
        if spec.gamma != 0:
            raise ValueError(
                "XY with gamma > 0 is site-resolved; use the DENSE backend or gdtwa")
        # all-to-all: sum_{i<j} J0 (sx sx + sy sy) = J0/2 [Sx^2 + Sy^2
        #   - sum_j (sx^2 + sy^2)^(j)]
        Sx, Sy = space.collective_matrix(sx), space.collective_matrix(sy)
        onsite = (spec.J0 / 2) * (sx @ sx + sy @ sy) + spec.V0 * (sz @ sz)
        return SymmetricHamiltonian(space, [
            (spec.J0 / 2, (Sx, Sx)),
            (spec.J0 / 2, (Sy, Sy)),
            (-1.0, (space.collective_matrix(onsite),)),
        ])

    if spec.variant == "CUSTOM":
        if not dense:
            raise ValueError("CUSTOM site-resolved terms require the DENSE backend")
        site, two_site = [], []
        for sites, op in spec.custom:
            if len(sites) == 1:
                site.append((1.0, op, sites[0]))
            elif len(sites) == 2:
                two_site.append((1.0, op, sites))
            else:
                raise ValueError("CUSTOM terms support one- or two-site operators")
        return DenseHamiltonian(space, site=site, two_site=two_site)

    raise ValueError(f"unknown Hamiltonian variant {spec.variant!r}")


def evolve(state, hamiltonian, t_grid, tol=1e-10):
    """Snapshots of the state at the given absolute times (>= state.t)."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a non-empty strictly increasing 1-d array")
    if t_grid[0] < state.t - 1e-15:
        raise ValueError("t_grid must not precede the state's own time")
    out = []
    psi = state.amps.copy()
    t = state.t
    maker = state.space.state
    for tk in t_grid:
        if tk > t:
            psi = expm_apply(hamiltonian.matvec, psi, tk - t, tol=tol)
            t = tk
        drift = abs(np.linalg.norm(psi) - 1.0)
        if drift > 1e-9:
            raise StepControllerError(f"norm drift {drift:.2e} at t={t:.4g}")
        out.append(maker(psi.copy(), t))
    return out


def product_state(phi, N, backend="DENSE", t=0.0):
    """Convenience constructor for |phi>^{tensor N} on either backend."""
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    d = phi.size
    if backend == "DENSE":
        return DenseSpace(N, d).product_state(phi, t)
    if backend == "SYMMETRIC":
        return SymmetricSpace(N, d).product_state(phi, t)
    raise ValueError(f"unknown backend {backend!r}")


def save_snapshot(state, path):
    """Binary amplitude dump with a one-line JSON header."""
    header = json.dumps({"backend": state.backend, "N": state.N, "d": state.d,
                         "t": state.t}).encode() + b"\n"
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(state.amps, dtype=complex).tobytes())


def load_snapshot(path):
    """Inverse of save_snapshot; returns (header dict, amplitude array)."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        amps = np.frombuffer(fh.read(), dtype=complex)
    return header, amps
