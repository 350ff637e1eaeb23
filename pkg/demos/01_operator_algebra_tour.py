"""Tour of the SU(d) generator basis and spin operators.

Builds the generalized Gell-Mann basis for a few local dimensions, checks
the trace orthogonality and commutation structure, and shows how spin
operators expand on the basis.
"""

import numpy as np

from qudit_squeeze import (
    expand_in_basis,
    gellmann_basis,
    spin_operators,
    structure_constants,
)

np.set_printoptions(precision=4, suppress=True, linewidth=120)

for d in (2, 3, 5):
    basis = gellmann_basis(d)
    print(f"d = {d}: {len(basis)} generators "
          f"({d * (d - 1) // 2} symmetric, {d * (d - 1) // 2} antisymmetric, "
          f"{d - 1} diagonal)")
    gram = np.array([[np.trace(a @ b).real for b in basis.generators]
                     for a in basis.generators])
    print(f"  trace orthogonality: max |Tr(l_a l_b) - 2 delta_ab| = "
          f"{np.max(np.abs(gram - 2 * np.eye(len(basis)))):.2e}")

print("\nFor d = 2 the basis is exactly the Pauli triple:")
basis2 = gellmann_basis(2)
for name, m in zip(("lambda_12", "g_12", "h_1"), basis2.generators):
    print(f"  {name} =\n{np.asarray(m).real if name != 'g_12' else np.asarray(m)}")

print("\nSpin operators close under commutation, [s_x, s_y] = i s_z:")
for d in (3, 5):
    sx, sy, sz = spin_operators(d)
    resid = np.max(np.abs(sx @ sy - sy @ sx - 1j * sz))
    print(f"  d = {d}: residual {resid:.2e}; "
          f"Tr(s_z^2) = {np.trace(sz @ sz).real:.3f} "
          f"(= d(d^2-1)/12 = {d * (d * d - 1) / 12:.3f})")

print("\ns_z of the d = 5 qudit expands on the diagonal generators as")
basis5 = gellmann_basis(5)
_, _, sz5 = spin_operators(5)
coeffs, _ = expand_in_basis(sz5, basis5)
for mu in range(1, 5):
    print(f"  coefficient on h_{mu}: {coeffs[basis5.index_diag(mu)]:.6f} "
          f"(exact {np.sqrt([1, 3, 6, 10][mu - 1]) / 2:.6f})")

print("\nStructure constants reconstruct every commutator (d = 3):")
basis3 = gellmann_basis(3)
f = structure_constants(basis3).f
worst = 0.0
for a in range(8):
    for b in range(8):
        comm = basis3[a] @ basis3[b] - basis3[b] @ basis3[a]
        rebuilt = 2j * sum(f[a, b, c] * basis3[c] for c in range(8))
        worst = max(worst, np.max(np.abs(comm - rebuilt)))
print(f"  worst reconstruction residual: {worst:.2e}")
