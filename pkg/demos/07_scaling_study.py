"""Squeezing-versus-size scaling study at desk scale.

Runs the exact symmetric-backend two-axis-twisting sweep over a ladder of
ensemble sizes, fits the power law (xi^2)_op ~ N^-k, and prints the
entanglement-witness diagnostic N / sqrt(xi^2) per size.  Uses a reduced
ladder so the demo finishes in well under a minute; the full preset is
`qudit-squeeze fig2`.
"""

import tempfile
from pathlib import Path

from qudit_squeeze.harness import fig2_config, fit_scaling, run_sweep

out = Path(tempfile.mkdtemp(prefix="scaling_demo_"))
config = fig2_config(out, n_list=(8, 16, 32, 64), num=120, seed=3)
summary = run_sweep(config)

print(f"{'N':>5s} {'xi2_op':>10s} {'t_op':>8s} {'N/sqrt(xi2)':>12s}")
points = []
for N in (8, 16, 32, 64):
    entry = summary["per_N"][str(N)]
    points.append((N, entry["xi2_op"]))
    print(f"{N:5d} {entry['xi2_op']:10.4f} {entry['t_op']:8.4f} "
          f"{entry['witness_trF_lower_bound']:12.1f}")

fit = fit_scaling(points)
print(f"\npower-law fit: xi2_op = {fit.prefactor:.3f} * N^(-{fit.k:.3f})  "
      f"(R^2 = {fit.r2:.4f})")
print(f"outputs written to {out}")
