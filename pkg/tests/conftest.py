"""
Shared fixtures and hypothesis profiles.

HYPOTHESIS_PROFILE=ci runs more examples; the default keeps the suite quick.
"""

import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from src.model import ConstantDrift, LinearCost, ProblemSpec, QuadraticCost

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def make_spec(d=2, alpha=None, beta=1.0, sigma=None, drift=None, cost=None, boundary_cost=None, K=1.0, name=None):
    alpha = np.full(d, 0.5) if alpha is None else np.asarray(alpha, dtype=float)
    return ProblemSpec(
        d=d,
        alpha=alpha,
        drift=drift or ConstantDrift(b0=[0.0] * d),
        sigma=np.eye(d) if sigma is None else np.asarray(sigma, dtype=float),
        beta=beta,
        running_cost=cost or QuadraticCost(Q=np.eye(d).tolist()),
        boundary_cost=None if boundary_cost is None else np.asarray(boundary_cost, dtype=float),
        lipschitz_bound=K,
        name=name,
    )


@pytest.fixture
def config_dir() -> Path:
    return CONFIG_DIR


@pytest.fixture
def quadratic_1d():
    """beta = 2, l = x^2; V(x) = x^2 / 2 + 1/4"""
    return make_spec(d=1, alpha=[0.0], beta=2.0, name="quadratic-1d")


@pytest.fixture
def linear_1d():
    """beta = 1, l = x; V(0) = 1 / sqrt(2)"""
    return make_spec(d=1, alpha=[0.0], beta=1.0, cost=LinearCost(w=[1.0]), name="linear-1d")


@pytest.fixture
def symmetric_2d():
    return make_spec(d=2, alpha=[0.5, 0.5], boundary_cost=[0.1, 0.1], name="symmetric-2d")
