"""Multiparameter spin squeezing with qudit ensembles.

Subpackages provide the SU(d) operator algebra, quantum-Fisher-matrix probe
optimization, collective readout and squeezing parameters, exact dense and
symmetric-subspace dynamics, a generalized discrete-Wigner trajectory solver,
a qutrit POVM for simultaneous two-quadrature readout, and a sweep harness.
"""

from .algebra import (
    GellMannBasis,
    StructureConstants,
    anticommutator,
    commutator,
    expand_in_basis,
    gellmann_basis,
    operator_from_json,
    operator_to_json,
    reconstruct_from_basis,
    spin_operators,
    structure_constants,
)
from .qfim import (
    OptimizationResult,
    SensingTask,
    SINGULAR,
    commutativity_residual,
    cost_from_qfim,
    optimize_probe,
    qfim,
)
from .readout import (
    ReadoutSet,
    SqueezingRecord,
    build_readout,
    collective_expectations,
    su2_subalgebra_check,
    vector_xi2,
    wineland_xi2,
    xi2_general,
    xi2_kappa_scan,
)
from .dynamics import (
    DenseState,
    HamiltonianSpec,
    SymmetricState,
    build_hamiltonian,
    evolve,
    product_state,
)
from .gdtwa import GdtwaConfig, run_gdtwa, sample_initial
from .povm import (
    NaimarkModel,
    OutcomeStats,
    PovmSet,
    build_effects,
    build_naimark,
    reconstruct,
    simulate_readout,
)
from .harness import (
    RunConfig,
    ScalingFit,
    fit_scaling,
    run_sweep,
    witness_diagnostic,
)

__version__ = "0.1.0"
