"""Shared golden operators and helpers for the test suite.

The d=3 matrices and d=5 generator expansions below are the published
closed forms of the SLD and transduction operators; tests compare them
entrywise against direct commutator construction.
"""

import math

import numpy as np

from qudit_squeeze.algebra import gellmann_basis, spin_operators
from qudit_squeeze.dynamics import DenseSpace

S2 = 1 / math.sqrt(2)

D3_LX = np.array([[0, -1j * S2, 0], [1j * S2, 0, 1j * S2], [0, -1j * S2, 0]])
D3_LY = np.array([[0, -S2, 0], [-S2, 0, S2], [0, S2, 0]], dtype=complex)
D3_GXX = np.array([[1, 0, 1], [0, -2, 0], [1, 0, 1]], dtype=complex)
D3_GXY = np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]])
D3_GYY = np.array([[1, 0, -1], [0, -2, 0], [-1, 0, 1]], dtype=complex)


def d5_reference_state():
    z = np.zeros(5, dtype=complex)
    z[0] = z[4] = 1j / 2
    z[2] = S2
    return z


def _combo(basis, terms):
    out = np.zeros((5, 5), dtype=complex)
    for coef, kind, idx in terms:
        if kind == "l":
            out = out + coef * basis[basis.index_sym(*idx)]
        elif kind == "g":
            out = out + coef * basis[basis.index_asym(*idx)]
        else:
            out = out + coef * basis[basis.index_diag(idx)]
    return out


def printed_d5_operators():
    """Published generator expansions of the d=5 SLDs and transductions."""
    basis = gellmann_basis(5)
    r2, r3, r6, r10, r30 = map(math.sqrt, (2, 3, 6, 10, 30))
    s32, s64, s24 = r3 / 4, r6 / 4, r2 / 4
    ops = {}
    ops["lx"] = _combo(basis, [
        (-s32, "l", (1, 2)), (-s32, "l", (1, 4)), (-s32, "l", (2, 5)), (-s32, "l", (4, 5)),
        (-0.25, "g", (1, 2)), (-0.25, "g", (1, 4)), (0.25, "g", (2, 5)), (0.25, "g", (4, 5)),
        (s64, "g", (2, 3)), (-s64, "g", (3, 4)), (s24, "l", (2, 3)), (s24, "l", (3, 4))])
    ops["ly"] = _combo(basis, [
        (0.25, "l", (1, 2)), (-0.25, "l", (1, 4)), (0.25, "l", (2, 5)), (-0.25, "l", (4, 5)),
        (s32, "g", (1, 2)), (-s32, "g", (1, 4)), (-s32, "g", (2, 5)), (s32, "g", (4, 5)),
        (-s64, "l", (2, 3)), (s64, "l", (3, 4)), (-s24, "g", (2, 3)), (-s24, "g", (3, 4))])
    ops["lz"] = _combo(basis, [
        (1.0, "g", (1, 5)), (S2, "l", (1, 3)), (-S2, "l", (3, 5))])
    ops["xx"] = _combo(basis, [
        (-10 / 8, "h", 1), (10 * r3 / 8, "h", 2), (-5 * r6 / 8, "h", 3), (r10 / 8, "h", 4),
        (-r2, "g", (3, 5)), (-r6 / 2, "l", (1, 3)), (-0.5, "l", (1, 5)),
        (2.0, "l", (2, 4)), (-r6 / 2, "l", (3, 5)), (r2, "g", (1, 3))])
    ops["xy"] = _combo(basis, [
        (6 * r3 / 8, "h", 1), (-2 / 8, "h", 2), (-7 * r2 / 8, "h", 3), (r30 / 8, "h", 4),
        (-2 * r2 * r3 / 8, "g", (3, 5)), (2 * r2 / 8, "l", (1, 3)), (-2 * r2 / 8, "l", (3, 5)),
        (-2 * r6 / 8, "g", (1, 3)), (0.5, "g", (1, 5)), (1.0, "g", (2, 4))])
    ops["xz"] = _combo(basis, [
        (-r3 / 2, "g", (1, 2)), (-r3 / 2, "g", (1, 4)), (r2 / 2, "g", (2, 3)),
        (-r3 / 2, "g", (2, 5)), (r2 / 2, "g", (3, 4)), (-r3 / 2, "g", (4, 5)),
        (1.0, "l", (1, 4)), (-1.0, "l", (2, 5))])
    ops["yx"] = _combo(basis, [
        (6 * r3 / 8, "h", 1), (-2 / 8, "h", 2), (-7 * r2 / 8, "h", 3), (r30 / 8, "h", 4),
        (-2 * r2 * r3 / 8, "g", (3, 5)), (-2 * r2 / 8, "l", (1, 3)), (2 * r2 / 8, "l", (3, 5)),
        (-2 * r6 / 8, "g", (1, 3)), (-0.5, "g", (1, 5)), (1.0, "g", (2, 4))])
    ops["yy"] = _combo(basis, [
        (-10 / 8, "h", 1), (10 * r3 / 8, "h", 2), (-5 * r6 / 8, "h", 3), (r10 / 8, "h", 4),
        (r2, "g", (1, 3)), (-r2, "g", (3, 5)), (r6 / 2, "l", (1, 3)),
        (-0.5, "l", (1, 5)), (-2.0, "l", (2, 4)), (r6 / 2, "l", (3, 5))])
    ops["yz"] = _combo(basis, [
        (-1.0, "g", (1, 4)), (1.0, "g", (2, 5)), (-r3 / 2, "l", (1, 2)),
        (r3 / 2, "l", (1, 4)), (r2 / 2, "l", (2, 3)), (r3 / 2, "l", (2, 5)),
        (r2 / 2, "l", (3, 4)), (-r3 / 2, "l", (4, 5))])
    ops["zx"] = _combo(basis, [
        (-r3 / 4, "g", (1, 2)), (-3 * r3 / 4, "g", (1, 4)), (r2 / 4, "g", (2, 3)),
        (-3 * r3 / 4, "g", (2, 5)), (r2 / 4, "g", (3, 4)), (-r3 / 4, "g", (4, 5)),
        (0.25, "l", (1, 2)), (0.75, "l", (1, 4)), (-r6 / 4, "l", (2, 3)),
        (-0.75, "l", (2, 5)), (r6 / 4, "l", (3, 4)), (-0.25, "l", (4, 5))])
    ops["zy"] = _combo(basis, [
        (0.25, "g", (1, 2)), (-0.75, "g", (1, 4)), (-r6 / 4, "g", (2, 3)),
        (0.75, "g", (2, 5)), (r6 / 4, "g", (3, 4)), (-0.25, "g", (4, 5)),
        (-r3 / 4, "l", (1, 2)), (3 * r3 / 4, "l", (1, 4)), (r2 / 4, "l", (2, 3)),
        (3 * r3 / 4, "l", (2, 5)), (r2 / 4, "l", (3, 4)), (-r3 / 4, "l", (4, 5))])
    ops["zz"] = _combo(basis, [
        (r2, "g", (1, 3)), (-r2, "g", (3, 5)), (-4.0, "l", (1, 5))])
    return ops


def frobenius_commutator_with_sz(H, space):
    """Exact ||[H, S_z]||_F using the diagonality of S_z in both backends."""
    if isinstance(space, DenseSpace):
        _, _, sz = spin_operators(space.d)
        m_single = np.diag(sz).real
        m = np.zeros(space.dim)
        for j in range(space.N):
            reps = space.d ** (space.N - 1 - j)
            tiles = space.d ** j
            m += np.tile(np.repeat(m_single, reps), tiles)
        total = 0.0
        for k in range(space.dim):
            e = np.zeros(space.dim, dtype=complex)
            e[k] = 1.0
            he = H.matvec(e)
            col = m[k] * he - m * he
            total += float(np.vdot(col, col).real)
        return math.sqrt(total)
    _, _, sz = spin_operators(space.d)
    Sz = space.collective_matrix(sz)
    Hm = H.to_matrix()
    comm = Hm @ Sz - Sz @ Hm
    return math.sqrt(abs((comm.conj().multiply(comm)).sum()))
