"""
Boundary Hamiltonians H_i(p) = min over M of { p.M e_i + h_i(M) }.

For the linear boundary cost h_i(M) = c.M e_i the minimum has the closed form
H_i(p) = q_i - alpha_i * max_{j != i} q_j^+ with q = p + c, attained at a
vertex column. Ties among maximizers go to the smallest index.
"""

import itertools
import logging
from typing import Callable, Optional

import numpy as np

from .errors import PreconditionError
from .reflection import ReflectionMatrix

logger = logging.getLogger(__name__)

BoundaryCost = Callable[[np.ndarray], float]


def _gradient(spec, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (spec.d,):
        raise PreconditionError(f"Gradient must have shape ({spec.d},), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise PreconditionError("Gradient must be finite")
    return p


def best_push_target(q: np.ndarray, i: int) -> int:
    """Smallest index j != i maximizing q_j when that maximum is positive, else -1"""
    others = np.delete(np.arange(q.shape[0]), i)
    if others.size == 0:
        return -1
    k = int(np.argmax(q[others]))
    return int(others[k]) if q[others[k]] > 0.0 else -1


def hamiltonian(spec, i: int, p) -> float:
    """
    Closed-form boundary Hamiltonian H_i(p)

    Args:
        spec: Problem instance (budgets alpha, boundary cost c)
        i: Coordinate index, 0-based
        p: Gradient vector of length d

    Returns:
        q_i - alpha_i max_{j != i} q_j^+ with q = p + c; q_0 when d = 1
    """
    i = spec.check_index(i)
    q = _gradient(spec, p) + spec.boundary_cost
    j = best_push_target(q, i)
    if j < 0:
        return float(q[i])
    return float(q[i] - spec.alpha[i] * q[j])


def hamiltonian_argmin(spec, i: int, p) -> ReflectionMatrix:
    """Vertex matrix attaining H_i(p); only column i is populated"""
    i = spec.check_index(i)
    q = _gradient(spec, p) + spec.boundary_cost
    j = best_push_target(q, i)
    P = np.zeros((spec.d, spec.d))
    if j >= 0:
        P[j, i] = spec.alpha[i]
    return ReflectionMatrix(P)


def hamiltonian_values(alpha: np.ndarray, q: np.ndarray) -> np.ndarray:
    """
    Vectorized closed form over a batch of shifted gradients

    Args:
        alpha: Budgets, shape (d,)
        q: Shifted gradients p + c, shape (..., d)

    Returns:
        Array of shape (..., d) holding H_i for every i
    """
    q = np.asarray(q, dtype=float)
    d = q.shape[-1]
    if d == 1:
        return q.copy()
    qpos = np.maximum(q, 0.0)
    out = np.empty_like(q)
    for i in range(d):
        rest = np.delete(qpos, i, axis=-1)
        out[..., i] = q[..., i] - alpha[i] * rest.max(axis=-1)
    return out


def _simplex_weights(n_targets: int, grid_per_entry: int) -> np.ndarray:
    """All weight vectors k/(g-1) with nonnegative integer k summing to at most g-1"""
    steps = grid_per_entry - 1
    if n_targets == 0:
        return np.zeros((1, 0))
    rows = [
        combo
        for combo in itertools.product(range(steps + 1), repeat=n_targets)
        if sum(combo) <= steps
    ]
    return np.asarray(rows, dtype=float).reshape(-1, n_targets) / steps


def hamiltonian_bruteforce(
    spec,
    i: int,
    p,
    grid_per_entry: int,
    boundary_cost: Optional[BoundaryCost] = None,
) -> float:
    """
    Minimize p.M e_i + h_i(M) over a simplex grid of feasible columns plus all vertices

    Args:
        spec: Problem instance
        i: Coordinate index, 0-based
        p: Gradient vector
        grid_per_entry: Grid points per column entry, at least 2
        boundary_cost: Optional general h_i evaluated on column i of M. When omitted
            the linear cost c.M e_i of the instance is used.

    Returns:
        The grid minimum. For the linear cost it equals `hamiltonian` exactly.
    """
    i = spec.check_index(i)
    if grid_per_entry < 2:
        raise PreconditionError(f"grid_per_entry must be >= 2, got {grid_per_entry}")
    p = _gradient(spec, p)
    d = spec.d
    targets = [j for j in range(d) if j != i]
    weights = _simplex_weights(len(targets), grid_per_entry)
    alpha_i = spec.alpha[i]

    e_i = np.zeros(d)
    e_i[i] = 1.0
    columns = np.tile(e_i, (1 + len(targets) + weights.shape[0], 1))
    for k, j in enumerate(targets):
        columns[1 + k, j] = -alpha_i
    if targets:
        columns[1 + len(targets) :, targets] = -alpha_i * weights

    if boundary_cost is None:
        q = p + spec.boundary_cost
        # elementwise products keep vertex values bit-equal to the closed form
        return float((columns * q).sum(axis=1).min())

    return min(float(p @ column + boundary_cost(column)) for column in columns)
