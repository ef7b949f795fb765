"""Radial Helmholtz transmission lab.

Closed-form modal solvers for lossy core-shell scatterers, dissipation-energy
diagnostics for anomalous localized resonance, resonance search in the
permittivity plane, and an independent boundary-spectrum formulation used as a
cross-check.
"""
from .errors import (
    AlrError,
    AssumptionViolatedError,
    BelowAsymptoticRegimeError,
    BranchViolationError,
    ExactModalResonanceError,
    FormulationMismatchError,
    HankelOriginError,
    NoCoreError,
    NonFiniteArgumentError,
    OutsideRepresentationError,
    QuadratureFailureError,
    RootSearchError,
    SpecValidationError,
    UnphysicalRootError,
)
from .scaled import SC_ONE, SC_ZERO, ScaledComplex
from .scatter import (
    ModalSolution,
    ModeCoefficients,
    PlasmonConfig,
    SourceCoefficients,
    point_source_coefficients,
    solve,
    solve_coreshell,
    solve_nocore,
    truncation_order,
)
from .specfun import (
    AsymptoticParts,
    WaveNumbers,
    asymptotic_parts,
    cyl_h1,
    cyl_j,
    shell_wavenumbers,
    spherical_h1,
    spherical_j,
)
from .fields import (
    EnergyReport,
    ExteriorBoundReport,
    dissipation_energy,
    eval_field,
    exterior_bound_probe,
    weak_resonance_check,
)
from .resonance import (
    DichotomyReport,
    ResidualCurve,
    ResonantPair,
    condition_lhs_coreshell,
    condition_lhs_nocore,
    critical_radius,
    denominator_residual,
    dichotomy_experiment,
    find_resonant_pair,
    loglog_slope,
    phi1,
    phi2,
    refine_condition_root,
    sweep,
    sweep_point,
)
from .np_spectrum import (
    NpEigenpair,
    check_assumption,
    funk_hecke_quadrature,
    np_alpha,
    np_eigenpair,
    np_field_values,
    np_identity_residual,
    solve_nocore_via_np,
)

__version__ = "0.1.0"
