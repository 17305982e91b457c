"""
Monte Carlo for the controlled reflected diffusion: policies, path engine and
value estimators
"""

from .engine import (
    BatchOutcome,
    discounted_cost,
    driving_path,
    make_generator,
    run_batches,
    sample_brownian,
    simulate,
)
from .estimators import (
    CostEstimate,
    DppResidual,
    default_grid,
    dpp_residual,
    estimate_value,
    estimates_frame,
    evaluate_policies,
    evaluate_policy,
    exit_probability,
    growth_constant,
    tail_bound,
)
from .policy import (
    BoundaryPolicy,
    Controller,
    PolicyDescriptor,
    PolicyKind,
    parse_policy,
    register_policy,
    resolve_policy,
    vertex_policies,
)

__all__ = [
    "BatchOutcome",
    "BoundaryPolicy",
    "Controller",
    "CostEstimate",
    "DppResidual",
    "PolicyDescriptor",
    "PolicyKind",
    "default_grid",
    "discounted_cost",
    "dpp_residual",
    "driving_path",
    "estimate_value",
    "estimates_frame",
    "evaluate_policies",
    "evaluate_policy",
    "exit_probability",
    "growth_constant",
    "make_generator",
    "parse_policy",
    "register_policy",
    "resolve_policy",
    "run_batches",
    "sample_brownian",
    "simulate",
    "tail_bound",
    "vertex_policies",
]
