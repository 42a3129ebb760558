"""Sparse polynomial chaos recovery with the transformed l1 penalty."""

from ._validation import DomainError, SizeError, SolverError
from .basis import (
    Basis,
    MeasurementMatrix,
    SampleSet,
    assemble_matrix,
    assemble_rhs,
    enumerate_total_degree,
    eval_basis,
    eval_legendre_1d,
    evaluate_expansion,
    sample_uniform,
)
from .harness import (
    ExperimentRecord,
    ExperimentSpec,
    emit_contour_grid,
    f1,
    f2,
    plant_sparse_target,
    records_to_csv,
    relative_l2_error,
    run_function_experiment,
    run_success_experiment,
)
from .penalty import PenaltyParam, concave_part, dc_subgradient, penalty, rho_a, shrink
from .solvers import (
    SolverConfig,
    SolverResult,
    adaptive_dca_tl1,
    dca_tl1,
    l1_basis_pursuit,
    l12_dca,
    solve,
)
from .theory import (
    error_constants,
    ric_bruteforce,
    sample_complexity,
    tl1_rip_threshold,
    verify_noiseless_bound,
    zhang_xin_condition,
    zhang_xin_margin,
)

__version__ = "0.1.0"

__all__ = [
    "Basis", "DomainError", "ExperimentRecord", "ExperimentSpec", "MeasurementMatrix",
    "PenaltyParam", "SampleSet", "SizeError", "SolverConfig", "SolverError", "SolverResult",
    "adaptive_dca_tl1", "assemble_matrix", "assemble_rhs", "concave_part", "dc_subgradient",
    "dca_tl1", "emit_contour_grid", "enumerate_total_degree", "error_constants", "eval_basis",
    "eval_legendre_1d", "evaluate_expansion", "f1", "f2", "l1_basis_pursuit", "l12_dca",
    "penalty", "plant_sparse_target", "records_to_csv", "relative_l2_error", "rho_a",
    "ric_bruteforce", "run_function_experiment", "run_success_experiment", "sample_complexity",
    "sample_uniform", "shrink", "solve", "tl1_rip_threshold", "verify_noiseless_bound",
    "zhang_xin_condition", "zhang_xin_margin",
]
