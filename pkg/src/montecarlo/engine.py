"""
Path simulation of the controlled reflected diffusion.

Single paths go through the Skorokhod solver (`simulate`); estimators use
`run_batches`, which advances many paths at once with one reflection step
per grid step and accumulates discounted costs on the fly. Every batch owns
a child stream of SeedSequence(seed), so two policies run with the same seed
see bitwise identical Brownian increments.
"""

import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
from dotenv import load_dotenv

from ..model.errors import PreconditionError
from ..skorokhod.paths import ControlPath, DrivingPath, PathPair, TimeGrid
from ..skorokhod.solver import reflect_step, solve_controlled
from ..util.parallel import ordered_map
from .policy import Controller, PolicyDescriptor, resolve_policy

logger = logging.getLogger(__name__)

load_dotenv()

DEFAULT_BATCH_SIZE = 500

SeedLike = Union[int, np.random.SeedSequence]


def batch_size() -> int:
    """Paths per batch (ORTHANT_HJB_BATCH, default 500)"""
    raw = os.getenv("ORTHANT_HJB_BATCH")
    try:
        value = int(raw) if raw else DEFAULT_BATCH_SIZE
    except ValueError:
        logger.warning(f"[MC] Ignoring non-integer ORTHANT_HJB_BATCH={raw!r}")
        value = DEFAULT_BATCH_SIZE
    return max(1, value)


def make_generator(seed: SeedLike) -> np.random.Generator:
    """
    Explicitly seeded generator

    Environment Variables:
        ORTHANT_HJB_BITGEN: numpy bit generator class name (default PCG64)
    """
    name = os.getenv("ORTHANT_HJB_BITGEN", "PCG64")
    try:
        bit_generator = getattr(np.random, name)
    except AttributeError:
        raise PreconditionError(f"Unknown bit generator '{name}'") from None
    return np.random.Generator(bit_generator(seed))


def sample_brownian(grid: TimeGrid, d: int, seed: SeedLike) -> np.ndarray:
    """
    Standard Brownian increments on the grid

    Returns:
        Array of shape (n_steps, d), i.i.d. N(0, dt)
    """
    if grid.dt <= 0:
        raise PreconditionError("grid step must be positive")
    rng = make_generator(seed)
    return rng.standard_normal((grid.n_steps, d)) * np.sqrt(grid.dt)


def driving_path(spec, x0: np.ndarray, grid: TimeGrid, increments: np.ndarray) -> DrivingPath:
    """w = sigma W accumulated from the increments, w[0] = 0"""
    w = np.zeros((grid.t.size, spec.d))
    w[1:] = np.cumsum(increments @ spec.sigma.T, axis=0)
    return DrivingPath(grid=grid, w=w, x0=x0)


def simulate(spec, x0, policy: PolicyDescriptor, grid: TimeGrid, seed: SeedLike) -> Tuple[PathPair, ControlPath]:
    """
    Simulate one controlled reflected path

    Constant policies are solved on the whole grid by the windowed Picard
    solver; feedback policies alternate one reflection step with a fresh
    policy evaluation at the new state.

    Returns:
        (pair, control) with the realized control path
    """
    x0 = spec.check_state(x0)
    if np.any(x0 < 0):
        raise PreconditionError("x0 must lie in the orthant")
    controller = resolve_policy(policy, spec)
    driver = driving_path(spec, x0, grid, sample_brownian(grid, spec.d, seed))

    if controller.is_constant:
        control = ControlPath.constant(grid, controller.constant)
        return solve_controlled(driver, control, spec), control

    n = grid.n_steps
    dt = grid.dt
    x = np.empty((n + 1, spec.d))
    y = np.zeros((n + 1, spec.d))
    p = np.empty((n, spec.d, spec.d))
    x[0] = x0
    dw = np.diff(driver.w, axis=0)
    for k in range(n):
        p[k] = controller.matrices(x[k : k + 1])[0]
        dx = spec.drift_at(x[k]) * dt + dw[k]
        x_next, dy = reflect_step(x[k : k + 1], dx[None, :], p[k])
        x[k + 1] = x_next[0]
        y[k + 1] = y[k] + dy[0]
    control = ControlPath(grid, p).validate(spec.alpha)
    return PathPair(grid=grid, x=x, y=y, iterations=n), control


def discounted_cost(pair: PathPair, control: ControlPath, spec) -> float:
    """
    Left-point quadrature of the discounted cost

        sum_k exp(-beta t_k) [ l(x_k) dt + sum_i (c.M_k e_i) (y_i(t_{k+1}) - y_i(t_k)) ]
    """
    grid = pair.grid
    t = grid.t[:-1]
    discount = np.exp(-spec.beta * t)
    running = spec.cost_at(pair.x[:-1]) * grid.dt
    # (c.M e_i) = c_i - sum_j c_j P_ji
    unit_costs = spec.boundary_cost - np.einsum("j,kji->ki", spec.boundary_cost, control.p)
    boundary = np.sum(unit_costs * np.diff(pair.y, axis=0), axis=1)
    return float(np.sum(discount * (running + boundary)))


@dataclass
class BatchOutcome:
    """Per-path results of one batch, in path order"""

    cost: np.ndarray
    terminal: np.ndarray
    stop_step: np.ndarray
    exited: np.ndarray


def _run_batch(
    spec,
    x0: np.ndarray,
    controller: Controller,
    grid: TimeGrid,
    n_steps: int,
    n_paths: int,
    seed: np.random.SeedSequence,
    ball_radius: Optional[float],
) -> BatchOutcome:
    rng = make_generator(seed)
    d = spec.d
    dt = grid.dt
    sqrt_dt = np.sqrt(dt)
    c = spec.boundary_cost
    has_boundary_cost = bool(np.any(c))

    x = np.broadcast_to(x0, (n_paths, d)).copy()
    cost = np.zeros(n_paths)
    alive = np.ones(n_paths, dtype=bool)
    stop_step = np.full(n_paths, n_steps)

    for k in range(n_steps):
        dw = rng.standard_normal((n_paths, d)) * sqrt_dt
        if not alive.any():
            continue
        discount = np.exp(-spec.beta * grid.t[k])
        p = controller.matrices(x)
        dx = spec.drift_at(x) * dt + dw @ spec.sigma.T
        x_next, dy = reflect_step(x, dx, p)

        step_cost = spec.cost_at(x) * dt
        if has_boundary_cost:
            unit = c - np.einsum("j,...ji->...i", c, p)
            step_cost = step_cost + np.sum(unit * dy, axis=1)
        cost += np.where(alive, discount * step_cost, 0.0)
        x = np.where(alive[:, None], x_next, x)

        if ball_radius is not None:
            out = alive & (np.linalg.norm(x - x0, axis=1) >= ball_radius)
            stop_step[out] = k + 1
            alive &= ~out

    if ball_radius is None:
        exited = np.zeros(n_paths, dtype=bool)
    else:
        # exited paths are frozen at their exit state
        exited = np.linalg.norm(x - x0, axis=1) >= ball_radius
    return BatchOutcome(cost=cost, terminal=x, stop_step=stop_step, exited=exited)


def run_batches(
    spec,
    x0,
    policy: PolicyDescriptor,
    grid: TimeGrid,
    n_paths: int,
    seed: SeedLike,
    n_steps: Optional[int] = None,
    ball_radius: Optional[float] = None,
) -> BatchOutcome:
    """
    Simulate n_paths paths in fixed-size batches on the shared worker pool

    Args:
        n_steps: Steps to run (default: whole grid)
        ball_radius: When set, each path freezes at the first grid time it leaves
            the ball of that radius around x0; its cost stops accruing there

    Returns:
        Concatenated BatchOutcome in batch order
    """
    x0 = spec.check_state(x0)
    if np.any(x0 < 0):
        raise PreconditionError("x0 must lie in the orthant")
    if n_paths < 1:
        raise PreconditionError(f"n_paths must be >= 1, got {n_paths}")
    n_steps = grid.n_steps if n_steps is None else n_steps
    controller = resolve_policy(policy, spec)

    size = batch_size()
    counts: List[int] = [size] * (n_paths // size)
    if n_paths % size:
        counts.append(n_paths % size)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    streams = root.spawn(len(counts))

    outcomes = ordered_map(
        lambda job: _run_batch(spec, x0, controller, grid, n_steps, job[0], job[1], ball_radius),
        list(zip(counts, streams)),
    )
    return BatchOutcome(
        cost=np.concatenate([o.cost for o in outcomes]),
        terminal=np.concatenate([o.terminal for o in outcomes]),
        stop_step=np.concatenate([o.stop_step for o in outcomes]),
        exited=np.concatenate([o.exited for o in outcomes]),
    )
