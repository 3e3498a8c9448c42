"""Constraint model, propagation and branch-and-bound search."""

from .model import (
    Domain,
    Model,
    Propagation,
    RootInfeasible,
    VarStore,
    build_model,
    propagate,
    select_variable,
    tie_break_ranks,
)
from .search import SolveResult, SolverConfig, SolveStats, Status, solve, solve_ranked

__all__ = [
    "Domain",
    "Model",
    "Propagation",
    "RootInfeasible",
    "VarStore",
    "build_model",
    "propagate",
    "select_variable",
    "tie_break_ranks",
    "SolveResult",
    "SolverConfig",
    "SolveStats",
    "Status",
    "solve",
    "solve_ranked",
]
