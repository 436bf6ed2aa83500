"""Sparse-grid combination technique for linear finite-difference schemes."""

from .combination import (
    CombinationSolution,
    ComponentSolveError,
    SolverHandle,
    combination_terms,
    combine,
    evaluate,
    full_grid_reference,
    surplus_at,
)
from .grid import CapacityError, DataError, GridFunction, TensorGrid, make_grid, sample
from .interp import interp_eval, trapezoidal_integral
from .problems import ProblemSpec, advection_profile, gaussian_poisson
from .solvers import ConvergenceError, SolverConfig, solve

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "CombinationSolution",
    "ComponentSolveError",
    "ConvergenceError",
    "DataError",
    "GridFunction",
    "ProblemSpec",
    "SolverConfig",
    "SolverHandle",
    "TensorGrid",
    "advection_profile",
    "combination_terms",
    "combine",
    "evaluate",
    "full_grid_reference",
    "gaussian_poisson",
    "interp_eval",
    "make_grid",
    "sample",
    "solve",
    "surplus_at",
    "trapezoidal_integral",
]
