"""Truncated Fock-space engine for the cutoff polaron with cone diagnostics."""

from .cone import (
    OrderReport,
    default_tolerance,
    ergodicity_check,
    in_cone,
    jordan_decompose,
    op_order_geq,
    positivity_improving,
    positivity_preserving,
    strictly_positive,
)
from .fock import (
    LAMBDA0,
    FockBasis,
    ModeGrid,
    SparseOperator,
    annihilation_op,
    build_mode_grid,
    creation_op,
    diagonal_contraction,
    enumerate_basis,
    field_op,
    number_op,
    weighted_number_op,
)
from .polaron import (
    LiebYamazakiBound,
    PolaronModel,
    assemble_hamiltonian,
    assemble_local_hamiltonian,
    cutoff_projection,
    form_bound_margins,
    lieb_yamazaki_bound,
    snap_cutoff,
)
from .spectral import (
    DispersionTable,
    EigenSystem,
    FarisReport,
    LocalIdentityReport,
    OrderEquivalenceReport,
    SpectralResult,
    SweepTable,
    convergence_diagnostic,
    cutoff_sweep,
    dispersion,
    family_shift,
    ground_state,
    local_identity_check,
    order_equivalence_check,
    pf_faris_check,
    resolvent,
    resolvent_apply,
    semigroup,
    semigroup_law_deviation,
)

__version__ = "0.1.0"
