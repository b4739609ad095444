"""Numerical laboratory for boundary regularity of u_t - x_n^gamma Lap u = f."""

from .elliptic import SliceProblem, SliceReport, reproduce_slice, slice_consistency, solve_poisson, solve_steady
from .exact import ExactSolution, LinearPart, eval_phi, eval_psi, operator_residual
from .fields import SpaceTimeField, write_field_csv
from .geometry import (
    CylinderRegion,
    Grid,
    anisotropic_distance,
    build_grid,
    cylinder_nodes,
    parabolic_distance,
)
from .harness import ConfigError, ExperimentSpec, run_experiment, spec_from_dict, validate_config
from .problem import ExteriorData, FaceData, ProblemConfig, Source
from .regularity import (
    ExponentFit,
    FlatnessTrace,
    HolderReport,
    HolderSampling,
    best_affine_fit,
    best_flat_coefficient,
    boundary_lipschitz_ratio,
    fit_boundary_exponent,
    flatness_trace,
    holder_seminorm,
    tangential_derivative,
    weighted_time_derivative,
)
from .solver import (
    check_discrete_comparison,
    discrete_laplacian,
    march_to_steady,
    solve_implicit_step,
    solve_problem,
    stable_dt,
    step_explicit,
)

__version__ = "0.1.0"
