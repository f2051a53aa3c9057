"""Finite-volume tools for shallow-water moment models over topography."""

from .basis import (BasisSet, MomentTensors, compute_moment_tensors,
                    eval_phi, friction_source, make_basis, project_profile)
from .models import (Model, ModelKind, StateVector, eigenvalues,
                     eigenvectors_swlme, flux, flux_jacobian,
                     hyperbolicity_scan, is_hyperbolic, make_model,
                     max_wave_speed, nonconservative_matrix, system_matrix,
                     topography_source)
from .steady import (FlowRegime, NoSteadyState, SteadyConstants, SteadyStatus,
                     classify_regime, constants_from_state, critical_height,
                     evaluate_steady_state, rh_jump, solve_heights,
                     steady_height_at)
from .scheme import (DryStateError, Grid, RoeData, baseline_reconstruct,
                     minmod, pvm_hll_fluctuations, roe_averages,
                     semidiscrete_rhs, wb_reconstruct)
from .timeint import TimeStepper, compute_dt, euler_step, integrate, ssprk2_step
from .harness import (ErrorReport, Scenario, builtin_scenarios, compare_models,
                      initial_state, l1_error, run_scenario, table_matrix,
                      topography_by_name)

try:
    from importlib.metadata import version as _version
    __version__ = _version("swme-lab")
except Exception:
    __version__ = "0.1.0"

__all__ = [
    "BasisSet", "MomentTensors", "compute_moment_tensors", "eval_phi",
    "friction_source", "make_basis", "project_profile",
    "Model", "ModelKind", "StateVector", "eigenvalues", "eigenvectors_swlme",
    "flux", "flux_jacobian", "hyperbolicity_scan", "is_hyperbolic",
    "make_model", "max_wave_speed", "nonconservative_matrix", "system_matrix",
    "topography_source",
    "FlowRegime", "NoSteadyState", "SteadyConstants", "SteadyStatus",
    "classify_regime", "constants_from_state", "critical_height",
    "evaluate_steady_state", "rh_jump", "solve_heights", "steady_height_at",
    "DryStateError", "Grid", "RoeData", "baseline_reconstruct", "minmod",
    "pvm_hll_fluctuations", "roe_averages", "semidiscrete_rhs", "wb_reconstruct",
    "TimeStepper", "compute_dt", "euler_step", "integrate", "ssprk2_step",
    "ErrorReport", "Scenario", "builtin_scenarios", "compare_models",
    "initial_state", "l1_error", "run_scenario", "table_matrix",
    "topography_by_name",
    "__version__",
]
