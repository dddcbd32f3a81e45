"""Hermitian semidefinite programming: problem types, maps, solver and builders."""

from .maps import DenseMap, FactorMap, LinearMap
from .problem import (Block, Constraint, Residuals, SdpProblem, SdpSizeError, SdpSolution,
                      SolverOptions, constraint)
from .solver import HermitianBasis, KKTError, SdpSolver, solve
from .builders import (SolverFailure, StrategyOptimum, build_strategy_dual, build_strategy_primal,
                       certificate_value, optimal_strategy_value)
from .realify import derealify, realified_problem, realify

__all__ = [
    "Block", "Constraint", "DenseMap", "FactorMap", "HermitianBasis", "KKTError", "LinearMap", "Residuals",
    "SdpProblem", "SdpSizeError", "SdpSolution", "SdpSolver", "SolverFailure", "SolverOptions",
    "StrategyOptimum", "build_strategy_dual", "build_strategy_primal", "certificate_value", "constraint",
    "derealify", "optimal_strategy_value", "realified_problem", "realify", "solve",
]
