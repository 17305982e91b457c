"""
Monotone finite differences for the HJB equation on a truncated orthant:
grid, stencil, Howard / sweep solver and grid-convergence audit
"""

from .convergence import ConvergenceReport, richardson_check
from .grid import OrthantGrid, default_grid
from .solver import ValueField, boundary_condition_values, extract_policy, residuals, solve_hjb
from .stencil import Stencil, build_stencil, check_dominance, classify_nodes

__all__ = [
    "ConvergenceReport",
    "OrthantGrid",
    "Stencil",
    "ValueField",
    "boundary_condition_values",
    "build_stencil",
    "check_dominance",
    "classify_nodes",
    "default_grid",
    "extract_policy",
    "residuals",
    "richardson_check",
    "solve_hjb",
]
