"""
Controlled Skorokhod solver: path carriers, Picard solver and the pushing bound
"""

from .bounds import BoundReport, check_reflection_bound
from .paths import ControlPath, DrivingPath, PathPair, TimeGrid, default_comp_tol
from .solver import (
    ContractionConstants,
    default_constants,
    path_metric,
    reflect_step,
    skorokhod_1d,
    solve_controlled,
)

__all__ = [
    "BoundReport",
    "ContractionConstants",
    "ControlPath",
    "DrivingPath",
    "PathPair",
    "TimeGrid",
    "check_reflection_bound",
    "default_comp_tol",
    "default_constants",
    "path_metric",
    "reflect_step",
    "skorokhod_1d",
    "solve_controlled",
]
