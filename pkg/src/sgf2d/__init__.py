"""Optimal control of 2D second-grade fluids with optimality certificates.

Stream-function/vorticity discretization of the alpha-regularized
incompressible model on the unit square under Navier slip, with exact
discrete adjoints, a projected-gradient tracking solver, and evaluable
second-order sufficiency / uniqueness thresholds.
"""

from .grid import (
    Grid,
    GridMismatchError,
    ScalarField2D,
    SolverDivergenceError,
    VectorField2D,
    advect,
    curl2d,
    divergence,
    helmholtz_solve,
    laplacian,
    poisson_solve,
    velocity_from_stream,
)
from .fieldio import read_field, write_field, write_field_csv
from .spaces import (
    DomainConstants,
    InequalityCheck,
    NormSuite,
    apply_A,
    check_inequality,
    estimate_constant,
    inner_l2,
    load_constants,
    norm_hk,
    norm_V,
    random_velocity,
    sample_field,
    save_constants,
    stream_from_coeffs,
)
from .state import (
    BlowUpError,
    ProblemData,
    StateSolution,
    Trajectory,
    nonlinear_term,
    solve_state,
    step_state,
    trilinear_b,
)
from .sensitivity import TangentState, solve_linearized, solve_second
from .adjoint import AdjointState, duality_gap, gradient_field, solve_adjoint
from .optimizer import (
    MultiStartReport,
    OptimizeOptions,
    OptimizeReport,
    cost,
    multi_start_uniqueness,
    optimize,
    project_Uad,
    solenoidal_part,
    vi_residual,
)
from .certificates import (
    CertificateInputs,
    CertificateReport,
    certify,
    check_adjoint_bound,
    check_state_bound,
    compute_lambda1,
    compute_lambda2,
    compute_lambda3,
    compute_lambda4,
    hessian_bilinear_form,
    hessian_quadratic_form,
)
from .config import ConfigError, RunConfig, build_problem, parse_config

__all__ = [
    "Grid",
    "GridMismatchError",
    "ScalarField2D",
    "SolverDivergenceError",
    "VectorField2D",
    "advect",
    "curl2d",
    "divergence",
    "helmholtz_solve",
    "laplacian",
    "poisson_solve",
    "velocity_from_stream",
    "read_field",
    "write_field",
    "write_field_csv",
    "DomainConstants",
    "InequalityCheck",
    "NormSuite",
    "apply_A",
    "check_inequality",
    "estimate_constant",
    "inner_l2",
    "load_constants",
    "norm_hk",
    "norm_V",
    "random_velocity",
    "sample_field",
    "save_constants",
    "stream_from_coeffs",
    "BlowUpError",
    "ProblemData",
    "StateSolution",
    "Trajectory",
    "nonlinear_term",
    "solve_state",
    "step_state",
    "trilinear_b",
    "TangentState",
    "solve_linearized",
    "solve_second",
    "AdjointState",
    "duality_gap",
    "gradient_field",
    "solve_adjoint",
    "MultiStartReport",
    "OptimizeOptions",
    "OptimizeReport",
    "cost",
    "multi_start_uniqueness",
    "optimize",
    "project_Uad",
    "solenoidal_part",
    "vi_residual",
    "CertificateInputs",
    "CertificateReport",
    "certify",
    "check_adjoint_bound",
    "check_state_bound",
    "compute_lambda1",
    "compute_lambda2",
    "compute_lambda3",
    "compute_lambda4",
    "hessian_bilinear_form",
    "hessian_quadratic_form",
    "ConfigError",
    "RunConfig",
    "build_problem",
    "parse_config",
]

__version__ = "0.1.0"
