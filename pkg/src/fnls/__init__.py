"""Constructive Lyapunov-Schmidt reduction for the fractional NLS equation.

Computes the limit-equation ground state, verifies its spectral structure,
solves the projected correction problem by contraction, and locates the
concentration point of the singularly perturbed standing wave.
"""

from .errors import (
    AdmissibilityError,
    ConfigError,
    ContractionError,
    ConvergenceError,
    FnlsError,
    GridMismatchError,
)
from .fracops import (
    MultiplierOp,
    frac_laplacian,
    frac_seminorm,
    l2_inner,
    l2_norm,
    resolvent_multiplier,
    sobolev_norm,
    spectral_gradient,
)
from .grid import (
    GridSpec,
    RealField,
    SpectralField,
    build_grid,
    coordinate_arrays,
    forward_transform,
    integrate,
    inverse_transform,
    read_fnsf,
    sample_function,
    write_fnsf,
)
from .groundstate import (
    AdmissibleRange,
    DecayFit,
    GroundState,
    admissible_range,
    center_profile,
    compute_ground_state,
    decay_exponent_fit,
    gns_quotient,
    ground_state_from_profile,
    petviashvili_step,
    translate_profile,
)
from .linearized import (
    EigenResult,
    GapEstimate,
    LinearizedOperator,
    apply_linearized,
    extremal_eigen,
    free_operator,
    kernel_projectors,
    limit_operator,
    morse_index,
    orthonormal_kernel_fields,
    spectral_gap,
)
from .potential import (
    PotentialSpec,
    derivative_sup_bounds,
    eval_potential,
    grad_potential,
    hess_potential,
    make_potential,
    normalize_at_critical_point,
    rescaled_potential_field,
)
from .reduction import (
    AssembledSolution,
    MapStudy,
    ReductionProblem,
    ReductionSolution,
    ansatz_residual,
    assemble_solution,
    default_nu,
    find_concentration_point,
    fixed_point_solve,
    limit_reduced_map,
    make_problem,
    nonlinear_remainder,
    reduced_map,
    s_eps_apply,
    scaled_map_study,
    solve_projected_linear,
)

__version__ = "0.1.0"
