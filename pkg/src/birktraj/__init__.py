"""Trajectory optimization on Birkhoff interpolation bases.

The package builds Birkhoff interpolation systems on Lobatto grids,
transcribes optimal control problems into nonlinear programs in the a/b
anchored forms (plain and quadrature-weighted), solves them with a dense
Newton-KKT method, maps the KKT multipliers to discrete costates, and checks
the result against an independently discretized first-order optimality
system.
"""

from .birkhoff import (
    BirkhoffSystem,
    ModalBasis,
    build_birkhoff,
    build_diff_matrix,
    build_modal_basis,
    eval_costate_interpolant,
    eval_state_interpolant,
    ibp_defect,
    ibp_defect_norm,
    quadrature,
)
from .bench import (
    CondStudyRow,
    ConvergenceRow,
    cond_study,
    convergence_study,
    loglog_slope,
    solve_with_fallback,
    write_cond_csv,
    write_cond_gnuplot,
    write_convergence_csv,
    write_convergence_gnuplot,
)
from .errors import (
    BirktrajError,
    DegenerateWeightError,
    DomainError,
    DomainMismatchError,
    EvaluationError,
    IllConditionedBasisError,
    IncompleteDerivativesError,
    InvalidDomainError,
    InvalidOrderError,
    NoConvergenceError,
    NotFoundError,
    ShapeError,
    UnsupportedGridError,
    UnsupportedMappingError,
    UnsupportedProblemError,
)
from .dual import (
    DualTrajectory,
    DualVariant,
    PontryaginReport,
    default_tolerance,
    map_covectors,
    solve_indirect,
    verified_variant,
    verify_pontryagin,
)
from .grid import AffineMap, Grid, GridKind, make_grid, to_reference
from .ocp import (
    AnalyticSolution,
    ConstraintKind,
    EndpointConstraints,
    OcpDefinition,
    RunningCost,
    ValidationReport,
    augment_running_cost,
    load_problem,
    prepared,
    registry,
    registry_names,
    registry_solution,
    validate,
)
from .solver import (
    NlpResult,
    SimpleNlp,
    SolveStatus,
    SolverOptions,
    kkt_residual,
    solve,
    write_iteration_log,
)
from .transcription import (
    CovectorMultipliers,
    DiscretizedNlp,
    FormTag,
    PrimalForm,
    PrimalSolution,
    extract_primal,
    initial_guess,
    residual_and_jacobian,
    transcribe,
)

__all__ = [
    "AffineMap",
    "AnalyticSolution",
    "BirkhoffSystem",
    "BirktrajError",
    "CondStudyRow",
    "ConstraintKind",
    "ConvergenceRow",
    "CovectorMultipliers",
    "DegenerateWeightError",
    "DiscretizedNlp",
    "DomainError",
    "DomainMismatchError",
    "DualTrajectory",
    "DualVariant",
    "EndpointConstraints",
    "EvaluationError",
    "FormTag",
    "Grid",
    "GridKind",
    "IllConditionedBasisError",
    "IncompleteDerivativesError",
    "InvalidDomainError",
    "InvalidOrderError",
    "ModalBasis",
    "NlpResult",
    "NoConvergenceError",
    "NotFoundError",
    "OcpDefinition",
    "PontryaginReport",
    "PrimalForm",
    "PrimalSolution",
    "RunningCost",
    "ShapeError",
    "SimpleNlp",
    "SolveStatus",
    "SolverOptions",
    "UnsupportedGridError",
    "UnsupportedMappingError",
    "UnsupportedProblemError",
    "ValidationReport",
    "augment_running_cost",
    "build_birkhoff",
    "build_diff_matrix",
    "build_modal_basis",
    "cond_study",
    "convergence_study",
    "default_tolerance",
    "eval_costate_interpolant",
    "eval_state_interpolant",
    "extract_primal",
    "ibp_defect",
    "ibp_defect_norm",
    "initial_guess",
    "kkt_residual",
    "load_problem",
    "loglog_slope",
    "make_grid",
    "map_covectors",
    "prepared",
    "quadrature",
    "registry",
    "registry_names",
    "registry_solution",
    "residual_and_jacobian",
    "solve",
    "solve_indirect",
    "solve_with_fallback",
    "to_reference",
    "transcribe",
    "validate",
    "verified_variant",
    "verify_pontryagin",
    "write_cond_csv",
    "write_cond_gnuplot",
    "write_convergence_csv",
    "write_convergence_gnuplot",
    "write_iteration_log",
]
