"""
Problem model for controlled reflection in the nonnegative orthant.

- problem.py: ProblemSpec, the full instance
- config.py / descriptors.py: YAML-backed pydantic configuration
- reflection.py: reflection matrices and vertex enumeration
- hamiltonian.py: closed-form and brute-force boundary Hamiltonians
- validation.py: sampling checks of the standing assumptions
"""

__version__ = "0.1.0"

from .config import ProblemConfig
from .descriptors import (
    AffineSaturatedDrift,
    CallbackDrift,
    ConstantDrift,
    LinearCost,
    MonomialCost,
    MonomialTerm,
    QuadraticCost,
    register_drift,
)
from .errors import (
    ConstraintViolationError,
    DimensionError,
    EventBudgetError,
    InstabilityError,
    IterationCapError,
    NonConvergenceError,
    NotOnBoundaryError,
    NumericalError,
    OrthantError,
    PreconditionError,
    SchemeError,
)
from .hamiltonian import (
    best_push_target,
    hamiltonian,
    hamiltonian_argmin,
    hamiltonian_bruteforce,
    hamiltonian_values,
)
from .problem import ProblemSpec, zero_drift
from .reflection import ReflectionMatrix, column_targets, vertex_matrices
from .validation import ConditionCheck, ValidationReport, validate_problem

__all__ = [
    "AffineSaturatedDrift",
    "CallbackDrift",
    "ConditionCheck",
    "ConstantDrift",
    "ConstraintViolationError",
    "DimensionError",
    "EventBudgetError",
    "InstabilityError",
    "IterationCapError",
    "LinearCost",
    "MonomialCost",
    "MonomialTerm",
    "NonConvergenceError",
    "NotOnBoundaryError",
    "NumericalError",
    "OrthantError",
    "PreconditionError",
    "ProblemConfig",
    "ProblemSpec",
    "QuadraticCost",
    "ReflectionMatrix",
    "SchemeError",
    "ValidationReport",
    "best_push_target",
    "column_targets",
    "hamiltonian",
    "hamiltonian_argmin",
    "hamiltonian_bruteforce",
    "hamiltonian_values",
    "register_drift",
    "validate_problem",
    "vertex_matrices",
    "zero_drift",
]
