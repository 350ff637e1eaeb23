"""From an optimal probe to readout operators and the squeezing parameter.

Shows the SLD readout set of the in-plane qutrit task, its closed SU(2)
subalgebra, the collective covariance and transduction matrices on a
product state, and the normalization xi^2 = 1 that every product probe
satisfies by construction.
"""

import numpy as np

from qudit_squeeze import (
    SensingTask,
    build_readout,
    collective_expectations,
    product_state,
    qfim,
    su2_subalgebra_check,
    vector_xi2,
    xi2_general,
    xi2_kappa_scan,
)

np.set_printoptions(precision=4, suppress=True)

task = SensingTask.from_axes(3, "xy")
probe = np.array([0, 1, 0], dtype=complex)
ro = build_readout(probe, task)

print("SLD readout directions of the in-plane qutrit task:")
print("l_x =\n", ro.slds[0])
print("l_y =\n", ro.slds[1])
print("transduction g_xx =\n", ro.transduction[0][0].real)

print("\nClosed SU(2) subalgebra residuals (s_a, l_a, g_aa/2):")
for axis, residuals in su2_subalgebra_check(ro).items():
    print(f"  {axis}: {[f'{r:.1e}' for r in residuals]}")

N = 12
state = product_state(probe, N, backend="SYMMETRIC")
C, G = collective_expectations(state, ro)
print(f"\nProduct state of N = {N} sites:")
print("C =\n", C)
print("G =\n", G)
print(f"xi^2 (general form)   = {xi2_general(C, G, qfim(probe, task), N):.8f}")
kappa, xi2 = xi2_kappa_scan(state, ro)
print(f"xi^2 (kappa-scan)     = {xi2:.8f}")

task5 = SensingTask.from_axes(5, "xyz")
probe5 = np.zeros(5, dtype=complex)
probe5[0] = probe5[4] = 1j / 2
probe5[2] = 1 / np.sqrt(2)
ro5 = build_readout(probe5, task5)
state5 = product_state(probe5, 4, backend="DENSE")
print(f"\nVector task, d = 5, N = 4 product probe: xi^2_vec = "
      f"{vector_xi2(state5, ro5):.8f}")
