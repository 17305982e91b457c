"""
Controlled Skorokhod problem in the orthant.

Given x0, a driving path w and a control path P(t_k), find X >= 0 and a
nondecreasing Y with Y(0) = 0 such that

    X(t_k) = x0 + sum_{l<k} b(X(t_l)) dt + w(t_k) + Y(t_k) - sum_{l<k} P(t_l) (Y(t_{l+1}) - Y(t_l))

and Y_i increases only when X_i = 0. The solution is the fixed point of the
maps (S, T): T(x, y) is the running maximum of (-U)^+ and S(x, y) = U + T,
iterated on windows short enough for the pair to contract in the metric
gamma1 * sup|x| + gamma2 * var(y).
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from ..model.errors import DimensionError, NonConvergenceError, PreconditionError
from .paths import ControlPath, DrivingPath, PathPair, TimeGrid

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500


def skorokhod_1d(psi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    One-dimensional Skorokhod map on a grid

    Args:
        psi: Free path with psi[0] >= 0

    Returns:
        (phi, eta) with eta[k] = max_{s <= k} (-psi[s])^+ and phi = psi + eta
    """
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 1 or psi.size == 0:
        raise DimensionError("psi must be a non-empty 1-d array")
    if psi[0] < 0:
        raise PreconditionError(f"psi[0] must be >= 0, got {psi[0]}")
    eta = np.maximum.accumulate(np.maximum(-psi, 0.0))
    return psi + eta, eta


@dataclass(frozen=True)
class ContractionConstants:
    gamma1: float
    gamma2: float
    t0: float
    rho: float

    def __str__(self):
        return f"gamma1={self.gamma1}, gamma2={self.gamma2:.6g}, t0={self.t0:.6g}, rho={self.rho:.6g}"


def default_constants(spec) -> ContractionConstants:
    """
    Metric weights and window length making the Picard map a contraction

    gamma1 = 1, gamma2 = 4a/(1-a) (1 when a = 0) with a = max alpha, and
    t0 = gamma1 / (2 K d (2 gamma1 + gamma2)).
    """
    a = spec.max_alpha
    K = spec.lipschitz_bound
    d = spec.d
    gamma1 = 1.0
    gamma2 = 4.0 * a / (1.0 - a) if a > 0 else 1.0
    t0 = 0.5 * gamma1 / (K * d * (2.0 * gamma1 + gamma2))
    budget_factor = a * (2.0 * gamma1 + gamma2) / gamma2
    drift_factor = K * d * t0 * (2.0 * gamma1 + gamma2) / gamma1
    rho = max(budget_factor, drift_factor)
    assert rho < 1.0, f"contraction factor {rho} >= 1"
    return ContractionConstants(gamma1=gamma1, gamma2=gamma2, t0=t0, rho=rho)


def _metric(dx: np.ndarray, dy: np.ndarray, constants: ContractionConstants) -> float:
    sup = np.abs(dx).max(axis=0).sum()
    variation = (np.abs(dy[0]) + np.abs(np.diff(dy, axis=0)).sum(axis=0)).sum()
    return float(constants.gamma1 * sup + constants.gamma2 * variation)


def path_metric(a: PathPair, b: PathPair, constants: ContractionConstants) -> float:
    """gamma1 * sum_i sup_k |x_i - x'_i| + gamma2 * sum_i var(y_i - y'_i)"""
    if not a.grid.matches(b.grid) or a.x.shape != b.x.shape:
        raise DimensionError("path_metric needs pairs on the same grid and dimension")
    return _metric(a.x - b.x, a.y - b.y, constants)


def _window_picard(
    spec,
    x_start: np.ndarray,
    y_start: np.ndarray,
    dw: np.ndarray,
    p: np.ndarray,
    dt: float,
    constants: ContractionConstants,
    tol: float,
    max_iter: int,
) -> Tuple[np.ndarray, np.ndarray, List[float]]:
    """
    Picard iteration on one window

    Args:
        x_start, y_start: State and pushing at the window start
        dw: w(t_k) - w(t_k0) for the window points, shape (s + 1, d)
        p: Controls on the window steps, shape (s, d, d)

    Returns:
        (x, y, distances) on the window points
    """
    n_pts = dw.shape[0]
    x = np.broadcast_to(x_start, (n_pts, x_start.size)).copy()
    y = np.broadcast_to(y_start, (n_pts, y_start.size)).copy()
    distances: List[float] = []

    for _ in range(max_iter):
        drift = spec.drift_at(x[:-1]) * dt
        pushed = np.einsum("kij,kj->ki", p, np.diff(y, axis=0))
        u = np.empty_like(x)
        u[0] = x_start
        u[1:] = x_start + np.cumsum(drift - pushed, axis=0) + dw[1:]
        t_map = np.maximum.accumulate(np.maximum(-u, 0.0), axis=0)
        x_new = u + t_map
        y_new = y_start + t_map

        distance = _metric(x_new - x, y_new - y, constants)
        distances.append(distance)
        x, y = x_new, y_new
        if distance < tol:
            return x, y, distances

    raise NonConvergenceError(
        f"Picard iteration did not reach tol={tol} in {max_iter} iterations (last distance {distances[-1]:.3e})",
        distances,
    )


def solve_controlled(
    driver: DrivingPath,
    control: ControlPath,
    spec,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    constants: Optional[ContractionConstants] = None,
) -> PathPair:
    """
    Solve the controlled Skorokhod problem window by window

    Args:
        driver: Start state and noise path
        control: Reflection matrices on the same grid
        spec: Problem instance (drift, budgets, K)
        tol: Stop when successive iterates are closer than tol
        max_iter: Iteration cap per window
        constants: Metric weights and window length; default_constants(spec) if omitted

    Returns:
        PathPair with the concatenated solution and the per-window distance history

    Raises:
        DimensionError: grids or dimensions differ
        ConstraintViolationError: a control matrix leaves the budget set
        NonConvergenceError: a window exhausted max_iter
    """
    if tol <= 0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    grid = driver.grid
    if not grid.matches(control.grid):
        raise DimensionError("driver and control grids differ")
    if driver.d != control.d or driver.d != spec.d:
        raise DimensionError(f"dimension mismatch: driver {driver.d}, control {control.d}, spec {spec.d}")
    control.validate(spec.alpha)

    constants = constants or default_constants(spec)
    dt = grid.dt
    n = grid.n_steps
    window = max(1, int(np.floor(constants.t0 / dt + 1e-9)))

    x = np.empty((n + 1, spec.d))
    y = np.empty((n + 1, spec.d))
    x[0] = driver.x0
    y[0] = 0.0
    history: List[List[float]] = []
    iterations = 0

    for k0 in range(0, n, window):
        k1 = min(k0 + window, n)
        xw, yw, distances = _window_picard(
            spec,
            x[k0].copy(),
            y[k0].copy(),
            driver.w[k0 : k1 + 1] - driver.w[k0],
            control.p[k0:k1],
            dt,
            constants,
            tol,
            max_iter,
        )
        x[k0 : k1 + 1] = xw
        y[k0 : k1 + 1] = yw
        history.append(distances)
        iterations += len(distances)

    if np.any(x < -tol):
        logger.warning(f"[SKOROKHOD] State dipped to {x.min():.3e} below -tol")
    x = np.where((x < 0.0) & (x >= -tol), 0.0, x)

    final = history[-1][-1] if history else 0.0
    logger.debug(f"[SKOROKHOD] Solved {n} steps in {len(history)} windows, {iterations} Picard iterations")
    return PathPair(grid=grid, x=x, y=y, iterations=iterations, final_distance=final, distances=history)


def reflect_step(
    x: np.ndarray,
    dx: np.ndarray,
    p: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One grid step of the controlled Skorokhod problem for a batch of paths

    Solves dy = max(0, -(x + dx - P dy)) by the same Picard iteration as a
    single-step window of `solve_controlled`, starting from dy = 0.

    Args:
        x: Current states, shape (n, d)
        dx: Free increments b(x) dt + sigma dW, shape (n, d)
        p: Controls, shape (d, d) or (n, d, d)

    Returns:
        (x_next, dy), both shape (n, d)
    """
    free = x + dx
    dy = np.zeros_like(free)
    for _ in range(max_iter):
        pushed = np.einsum("...ij,...j->...i", p, dy)
        dy_new = np.maximum(-(free - pushed), 0.0)
        change = float(np.abs(dy_new - dy).max()) if dy.size else 0.0
        dy = dy_new
        if change < tol:
            break
    else:
        raise NonConvergenceError(f"reflection step did not settle in {max_iter} iterations")
    x_next = free - np.einsum("...ij,...j->...i", p, dy) + dy
    return np.maximum(x_next, 0.0), dy
