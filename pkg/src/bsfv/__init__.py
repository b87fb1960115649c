"""Finite-volume TPFA and fitted TPFA solvers for the Black-Scholes equation."""

from .analytics import (ErrorReport, NormKind, SaturationError, bs_call_price, discrete_norm,
                        error_vs_exact, observed_order, std_normal_cdf)
from .flux import SchemeKind, TridiagonalOperator, assemble, face_transmissibilities
from .harness import ConfigError, RunConfig, StudySpec, run_price, run_single, run_space_study, run_time_study
from .mesh import Mesh, MeshError, build_geometric, build_uniform, from_nodes
from .model import BlackScholesModel, BoundaryData, MarketData, default_market, european_call
from .stepper import SolutionGrid, SolverError, StepConfig, TimeGrid, march, theta_step, thomas_solve

__version__ = "0.1.0"

__all__ = [
    "BlackScholesModel", "BoundaryData", "ConfigError", "ErrorReport", "MarketData", "Mesh",
    "MeshError", "NormKind", "RunConfig", "SaturationError", "SchemeKind", "SolutionGrid",
    "SolverError", "StepConfig", "StudySpec", "TimeGrid", "TridiagonalOperator", "assemble",
    "bs_call_price", "build_geometric", "build_uniform", "default_market", "discrete_norm",
    "error_vs_exact", "european_call", "face_transmissibilities", "from_nodes", "march",
    "observed_order", "run_price", "run_single", "run_space_study", "run_time_study",
    "std_normal_cdf", "theta_step", "thomas_solve",
]
