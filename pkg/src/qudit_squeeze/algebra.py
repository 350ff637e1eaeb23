"""SU(d) generator basis, spin operators, and basis expansions.

Conventions used throughout the package:

* Basis states of a d-level site are ordered by descending spin projection,
  index mu = 1..d maps to m = +S, +S-1, ..., -S with S = (d-1)/2.  With this
  ordering s_z = diag(S, S-1, ..., -S); for d = 3 that is diag(1, 0, -1).
* The generalized Gell-Mann generators are arranged in one flat list:
  first the d(d-1)/2 symmetric off-diagonal matrices
  lambda_{mu,nu} = |mu><nu| + |nu><mu|  (mu < nu, lexicographic),
  then the antisymmetric ones
  g_{mu,nu} = -i(|mu><nu| - |nu><mu|),
  then the d-1 diagonal matrices
  h_mu = sqrt(2/(mu(mu+1))) (sum_{k<=mu} |k><k| - mu |mu+1><mu+1|).
* All generators are traceless and satisfy Tr(lambda_a lambda_b) = 2 delta_ab.
* Expansion coefficients of a Hermitian operator A are
  c_a = Tr(A lambda_a)/2 plus an identity coefficient Tr(A)/d.

All operators are dense complex numpy arrays; dimensions up to d = 16 are
supported (single-site operators are tiny, sparsity buys nothing here).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-10

__all__ = [
    "GellMannBasis",
    "StructureConstants",
    "gellmann_basis",
    "spin_operators",
    "expand_in_basis",
    "reconstruct_from_basis",
    "commutator",
    "anticommutator",
    "structure_constants",
    "operator_to_json",
    "operator_from_json",
]


def _check_dimension(d):
    if int(d) != d or d < 2:
        raise ValueError(f"local dimension must be an integer >= 2, got {d}")
    if d > 16:
        raise ValueError(f"local dimension {d} exceeds the supported maximum of 16")
    return int(d)


def _freeze(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GellMannBasis:
    """Ordered SU(d) generator basis (symmetric, antisymmetric, diagonal)."""

    d: int
    generators: tuple = field(repr=False)

    def __len__(self):
        return len(self.generators)

    def __getitem__(self, a):
        return self.generators[a]

    def index_sym(self, mu, nu):
        """Flat index of lambda_{mu,nu}; mu, nu are 1-based with mu < nu."""
        return self._pair_offset(mu, nu)

    def index_asym(self, mu, nu):
        """Flat index of g_{mu,nu}; mu, nu are 1-based with mu < nu."""
        return self.d * (self.d - 1) // 2 + self._pair_offset(mu, nu)

    def index_diag(self, mu):
        """Flat index of h_mu; mu is 1-based, 1 <= mu <= d-1."""
        if not 1 <= mu <= self.d - 1:
            raise ValueError(f"diagonal index must be in 1..{self.d - 1}, got {mu}")
        return self.d * (self.d - 1) + mu - 1

    def _pair_offset(self, mu, nu):
        if not 1 <= mu < nu <= self.d:
            raise ValueError(f"need 1 <= mu < nu <= {self.d}, got ({mu}, {nu})")
        # lexicographic position of (mu, nu) among ordered pairs
        return (mu - 1) * self.d - mu * (mu - 1) // 2 + (nu - mu - 1)


@dataclass(frozen=True)
class StructureConstants:
    """Antisymmetric tensor f with [lambda_a, lambda_b] = 2i sum_c f_abc lambda_c."""

    d: int
    f: np.ndarray = field(repr=False)


def gellmann_basis(d):
    """Build the d^2 - 1 generalized Gell-Mann generators in list order.

    Parameters
    ----------
    d : int
        Local dimension, d >= 2.

    Returns
    -------
    GellMannBasis
    """
    d = _check_dimension(d)
    gens = []
    for mu in range(d):
        for nu in range(mu + 1, d):
            lam = np.zeros((d, d), dtype=complex)
            lam[mu, nu] = lam[nu, mu] = 1.0
            gens.append(_freeze(lam))
    for mu in range(d):
        for nu in range(mu + 1, d):
            g = np.zeros((d, d), dtype=complex)
            g[mu, nu] = -1j
            g[nu, mu] = 1j
            gens.append(_freeze(g))
    for mu in range(1, d):
        h = np.zeros((d, d), dtype=complex)
        h[:mu, :mu] = np.eye(mu)
        h[mu, mu] = -mu
        h *= np.sqrt(2.0 / (mu * (mu + 1)))
        gens.append(_freeze(h))
    return GellMannBasis(d=d, generators=tuple(gens))


def spin_operators(d):
    """Spin operators (s_x, s_y, s_z) for spin S = (d-1)/2.

    s_z is diagonal with eigenvalues S, S-1, ..., -S (descending, matching
    the basis-state ordering documented in the module docstring).

    Parameters
    ----------
    d : int
        Local dimension, d >= 2.

    Returns
    -------
    (s_x, s_y, s_z) : three (d, d) complex Hermitian arrays
    """
    d = _check_dimension(d)
    S = (d - 1) / 2
    m = S - np.arange(d)
    sp = np.zeros((d, d))
    for k in range(d - 1):
        sp[k, k + 1] = np.sqrt(S * (S + 1) - m[k + 1] * (m[k + 1] + 1))
    sx = (sp + sp.T) / 2
    sy = (sp - sp.T) / 2j
    sz = np.diag(m)
    return (_freeze(sx.astype(complex)), _freeze(sy.astype(complex)),
            _freeze(sz.astype(complex)))


def expand_in_basis(op, basis):
    """Project a square operator onto the generator basis.

    Returns (coeffs, id_coeff) with coeffs[a] = Tr(op lambda_a)/2 and
    id_coeff = Tr(op)/d, so that
    op = id_coeff * I + sum_a coeffs[a] * lambda_a.
    Coefficients are real for Hermitian input; complex input is accepted
    (coefficients then carry the anti-Hermitian part too).
    """
    op = np.asarray(op)
    if op.shape != (basis.d, basis.d):
        raise ValueError(f"operator shape {op.shape} does not match basis d={basis.d}")
    coeffs = np.empty(len(basis), dtype=complex)
    for a, lam in enumerate(basis.generators):
        coeffs[a] = np.trace(op @ lam) / 2
    id_coeff = np.trace(op) / basis.d
    if np.max(np.abs(coeffs.imag), initial=0.0) < HERMITICITY_TOL and abs(id_coeff.imag) < HERMITICITY_TOL:
        return coeffs.real, id_coeff.real
    return coeffs, id_coeff


def reconstruct_from_basis(coeffs, id_coeff, basis):
    """Inverse of expand_in_basis."""
    if len(coeffs) != len(basis):
        raise ValueError(f"expected {len(basis)} coefficients, got {len(coeffs)}")
    out = id_coeff * np.eye(basis.d, dtype=complex)
    for c, lam in zip(coeffs, basis.generators):
        if c != 0:
            out = out + c * lam
    return out


def commutator(a, b):
    """i[a, b]; Hermitian whenever a and b are Hermitian."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return 1j * (a @ b - b @ a)


def anticommutator(a, b):
    """{a, b} = ab + ba."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b + b @ a


def structure_constants(basis):
    """Structure constants f_abc = Tr([lambda_a, lambda_b] lambda_c) / (4i)."""
    n = len(basis)
    gens = basis.generators
    f = np.zeros((n, n, n))
    for a in range(n):
        for b in range(a + 1, n):
            comm = gens[a] @ gens[b] - gens[b] @ gens[a]
            for c in range(n):
                val = np.trace(comm @ gens[c]) / 4j
                if abs(val.imag) > HERMITICITY_TOL:
                    raise AssertionError(
                        f"structure constant f[{a},{b},{c}] has imaginary residue {val.imag:.2e}")
                if abs(val.real) > HERMITICITY_TOL:
                    f[a, b, c] = val.real
                    f[b, a, c] = -val.real
    return StructureConstants(d=basis.d, f=_freeze(f))


def operator_to_json(op):
    """Serialize an operator to {dim, re, im} with row-major entry lists."""
    op = np.asarray(op, dtype=complex)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {op.shape}")
    return {
        "dim": op.shape[0],
        "re": [[float(x) for x in row] for row in op.real],
        "im": [[float(x) for x in row] for row in op.imag],
    }


def operator_from_json(doc):
    """Inverse of operator_to_json."""
    dim = doc["dim"]
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc["im"], dtype=float)
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise ValueError("matrix data does not match declared dimension")
    return re + 1j * im
