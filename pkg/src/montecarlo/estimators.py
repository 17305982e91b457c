"""
Monte Carlo estimators: discounted cost per policy, value upper bound over a
policy family, dynamic-programming residual and ball-exit probability.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate

from ..model.descriptors import ConstantDrift
from ..model.errors import PreconditionError
from ..skorokhod.paths import TimeGrid
from .engine import SeedLike, run_batches
from .policy import PolicyDescriptor

logger = logging.getLogger(__name__)

DEFAULT_N_PATHS = 10_000
DEFAULT_DT = 1e-3
HORIZON_FACTOR = 12.0

ValueOracle = Callable[[np.ndarray], np.ndarray]


def default_grid(spec, dt: float = DEFAULT_DT, horizon: Optional[float] = None) -> TimeGrid:
    """Grid up to T = 12 / beta unless a horizon is given"""
    return TimeGrid.uniform(HORIZON_FACTOR / spec.beta if horizon is None else horizon, dt)


@dataclass
class CostEstimate:
    mean: float
    std_error: float
    n_paths: int
    horizon: float
    tail_bound: float
    policy: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _drift_l1_bound(spec) -> float:
    K = spec.lipschitz_bound
    if isinstance(spec.drift, ConstantDrift):
        return float(np.abs(np.clip(spec.drift.b0, -K, K)).sum())
    return spec.d * K


def growth_constant(spec) -> float:
    """
    Constant c1 in V(x) <= c1 (1 + |x|^m), estimated from the cost growth
    and a displacement envelope kappa_b s + kappa_sigma sqrt(s) of the state
    """
    a = spec.max_alpha
    m = spec.running_cost.growth_degree
    c_l = spec.running_cost.growth_constant
    beta = spec.beta
    amplification = (1.0 + a) / (1.0 - a)
    kappa_b = amplification * _drift_l1_bound(spec)
    kappa_sigma = amplification * float(np.linalg.norm(spec.sigma, axis=1).sum())

    envelope, _ = integrate.quad(
        lambda s: beta * np.exp(-beta * s) * (kappa_b * s + kappa_sigma * np.sqrt(s)) ** m,
        0.0,
        np.inf,
    )
    return c_l * 2.0 ** max(m - 1.0, 0.0) / beta * (1.0 + envelope)


def tail_bound(spec, terminal_max: float, horizon: float) -> float:
    """
    Bound on the cost discarded after the horizon:
    exp(-beta T) [c1 (1 + |x|^m) + boundary term], |x| the largest terminal state
    """
    a = spec.max_alpha
    m = spec.running_cost.growth_degree
    c1 = growth_constant(spec)
    running = c1 * (1.0 + terminal_max**m)
    c_max = float(np.abs(spec.boundary_cost).max())
    boundary = 0.0
    if c_max > 0:
        sigma_rows = float(np.linalg.norm(spec.sigma, axis=1).sum())
        boundary = c_max * (1.0 + a) / (1.0 - a) * (
            _drift_l1_bound(spec) / spec.beta + sigma_rows / np.sqrt(2.0 * spec.beta)
        )
    return float(np.exp(-spec.beta * horizon) * (running + boundary))


def _summarize(values: np.ndarray) -> Tuple[float, float]:
    n = values.size
    mean = float(values.mean())
    std_error = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return mean, std_error


def evaluate_policy(
    spec,
    x0,
    policy: PolicyDescriptor,
    n_paths: int,
    grid: TimeGrid,
    seed: SeedLike,
) -> CostEstimate:
    """Discounted cost of one policy from x0, averaged over n_paths paths"""
    if n_paths < 2:
        raise PreconditionError(f"n_paths must be >= 2, got {n_paths}")
    outcome = run_batches(spec, x0, policy, grid, n_paths, seed)
    mean, std_error = _summarize(outcome.cost)
    terminal_max = float(np.linalg.norm(outcome.terminal, axis=1).max())
    estimate = CostEstimate(
        mean=mean,
        std_error=std_error,
        n_paths=n_paths,
        horizon=grid.horizon,
        tail_bound=tail_bound(spec, terminal_max, grid.horizon),
        policy=policy.name,
    )
    logger.info(
        f"[MC] {policy.name}: J = {mean:.6g} +/- {std_error:.3g} (n={n_paths}, T={grid.horizon:g}, tail <= {estimate.tail_bound:.2e})"
    )
    return estimate


def evaluate_policies(
    spec,
    x0,
    policies: Sequence[PolicyDescriptor],
    n_paths: int,
    grid: TimeGrid,
    seed: SeedLike,
) -> List[CostEstimate]:
    """Evaluate every policy on common random numbers"""
    if not policies:
        raise PreconditionError("policy list is empty")
    return [evaluate_policy(spec, x0, policy, n_paths, grid, seed) for policy in policies]


def estimate_value(
    spec,
    x0,
    policies: Sequence[PolicyDescriptor],
    n_paths: int = DEFAULT_N_PATHS,
    grid: Optional[TimeGrid] = None,
    seed: SeedLike = 0,
) -> Tuple[PolicyDescriptor, CostEstimate]:
    """
    Upper estimate of V(x0): the smallest mean discounted cost over the family

    Returns:
        (best policy, its CostEstimate); ties go to the earlier policy
    """
    grid = grid or default_grid(spec)
    estimates = evaluate_policies(spec, x0, policies, n_paths, grid, seed)
    best = int(np.argmin([estimate.mean for estimate in estimates]))
    return policies[best], estimates[best]


def estimates_frame(estimates: Sequence[CostEstimate]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "policy": [e.policy for e in estimates],
            "mean": [e.mean for e in estimates],
            "std_error": [e.std_error for e in estimates],
            "n": [e.n_paths for e in estimates],
            "T": [e.horizon for e in estimates],
            "tail_bound": [e.tail_bound for e in estimates],
        }
    )


@dataclass
class DppResidual:
    residual: float
    std_error: float
    rhs: float
    value: float
    policy: str

    def __float__(self) -> float:
        return self.residual


def dpp_residual(
    spec,
    x0,
    r: float,
    t: float,
    policies: Sequence[PolicyDescriptor],
    n_paths: int,
    grid: TimeGrid,
    seed: SeedLike,
    value: ValueOracle,
) -> DppResidual:
    """
    Dynamic-programming residual at x0

    For each policy estimates E[ cost up to s + exp(-beta s) V(X(s)) ] with
    s = min(exit time of the ball B_r(x0), t), takes the minimum over the
    family and compares it with V(x0), V given by the value oracle.
    """
    if r <= 0 or t <= 0:
        raise PreconditionError(f"r and t must be positive, got r={r}, t={t}")
    if not policies:
        raise PreconditionError("policy list is empty")
    x0 = spec.check_state(x0)
    n_steps = grid.steps_until(t)

    best_mean, best_se, best_name = np.inf, 0.0, ""
    for policy in policies:
        outcome = run_batches(spec, x0, policy, grid, n_paths, seed, n_steps=n_steps, ball_radius=r)
        stop_time = outcome.stop_step * grid.dt
        terminal_value = np.asarray(value(outcome.terminal), dtype=float).reshape(-1)
        samples = outcome.cost + np.exp(-spec.beta * stop_time) * terminal_value
        mean, std_error = _summarize(samples)
        if mean < best_mean:
            best_mean, best_se, best_name = mean, std_error, policy.name

    v0 = float(np.asarray(value(x0[None, :]), dtype=float).reshape(-1)[0])
    residual = abs(best_mean - v0)
    logger.info(f"[MC] DPP residual at x0={x0.tolist()}: |{best_mean:.6g} - {v0:.6g}| = {residual:.3g} (se {best_se:.3g})")
    return DppResidual(residual=residual, std_error=best_se, rhs=best_mean, value=v0, policy=best_name)


def exit_probability(
    spec,
    x0,
    r: float,
    t: float,
    policy: PolicyDescriptor,
    n_paths: int,
    grid: TimeGrid,
    seed: SeedLike,
) -> float:
    """Fraction of paths leaving the ball B_r(x0) by time t (checked at grid times)"""
    if r <= 0 or t <= 0:
        raise PreconditionError(f"r and t must be positive, got r={r}, t={t}")
    n_steps = grid.steps_until(t)
    outcome = run_batches(spec, x0, policy, grid, n_paths, seed, n_steps=n_steps, ball_radius=r)
    return float(outcome.exited.mean())
