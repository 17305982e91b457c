"""
Queueing network with help: event-driven simulation under diffusion scaling
and comparison against the limiting reflected diffusion
"""

from .diffusion import (
    ComparisonReport,
    bootstrap_w1_std,
    compare_to_diffusion,
    diffusion_policy,
    network_to_problem,
)
from .network import (
    HelpRule,
    NetworkCost,
    NetworkSpec,
    ScaledPath,
    network_discounted_cost,
    simulate_network,
    simulate_replications,
)

__all__ = [
    "ComparisonReport",
    "HelpRule",
    "NetworkCost",
    "NetworkSpec",
    "ScaledPath",
    "bootstrap_w1_std",
    "compare_to_diffusion",
    "diffusion_policy",
    "network_discounted_cost",
    "network_to_problem",
    "simulate_network",
    "simulate_replications",
]
