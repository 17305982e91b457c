"""
Euclidean projection onto S_delta by Dykstra's alternating projections over
its halfspaces, vectorized over a batch of points.

After Dykstra settles, each point is polished by projecting exactly onto the
affine hull of its active constraints; the polished point is kept only when
it is feasible and the multipliers are nonnegative.
"""

import logging

import numpy as np

from ..model.errors import DimensionError, IterationCapError, PreconditionError
from .body import ConvexBody

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-12
MAX_SWEEPS = 100_000
ACTIVE_TOL = 1e-9
MAX_CONDITION = 1e12
FEASIBLE_TOL = 1e-12


def _dykstra(points: np.ndarray, A: np.ndarray, b: np.ndarray, tol: float, max_sweeps: int) -> np.ndarray:
    norms_sq = np.einsum("ij,ij->i", A, A)
    x = points.copy()
    increments = np.zeros((A.shape[0],) + points.shape)
    for sweep in range(max_sweeps):
        previous = x
        for j in range(A.shape[0]):
            y = x + increments[j]
            excess = np.maximum(y @ A[j] - b[j], 0.0) / norms_sq[j]
            x = y - excess[:, None] * A[j]
            increments[j] = y - x
        if np.abs(x - previous).max() < tol:
            logger.debug(f"[TESTFN] Dykstra settled after {sweep + 1} sweeps")
            return x
    raise IterationCapError(f"Dykstra projection exceeded {max_sweeps} sweeps")


def _polish(points: np.ndarray, projected: np.ndarray, A: np.ndarray, b: np.ndarray) -> np.ndarray:
    active = (projected @ A.T) >= b - ACTIVE_TOL
    out = projected.copy()
    patterns, inverse = np.unique(active, axis=0, return_inverse=True)
    inverse = np.asarray(inverse).reshape(-1)
    for index, pattern in enumerate(patterns):
        if not pattern.any():
            continue
        rows = np.flatnonzero(inverse == index)
        A_act = A[pattern]
        gram = A_act @ A_act.T
        if np.linalg.cond(gram) > MAX_CONDITION:
            continue
        residual = points[rows] @ A_act.T - b[pattern]
        try:
            multipliers = np.linalg.solve(gram, residual.T).T
        except np.linalg.LinAlgError:
            continue
        candidate = points[rows] - multipliers @ A_act
        feasible = np.all(candidate @ A.T <= b + FEASIBLE_TOL, axis=1)
        valid = feasible & np.all(multipliers >= -FEASIBLE_TOL, axis=1)
        out[rows[valid]] = candidate[valid]
    return out


def project_sdelta(x, body: ConvexBody, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """
    Project one point (shape (d,)) or a batch (shape (n, d)) onto S_delta

    Raises:
        IterationCapError: Dykstra needed more than max_sweeps sweeps
    """
    if tol <= 0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    points = np.asarray(x, dtype=float)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    if points.shape[1] != body.d:
        raise DimensionError(f"points must have {body.d} columns, got {points.shape}")
    A, b = body.halfspaces()

    inside = np.all(points @ A.T <= b, axis=1)
    out = points.copy()
    outside = ~inside
    if outside.any():
        projected = _dykstra(points[outside], A, b, tol, max_sweeps)
        out[outside] = _polish(points[outside], projected, A, b)
    return out[0] if single else out


def distance_sdelta(x, body: ConvexBody, tol: float = DEFAULT_TOL) -> np.ndarray:
    points = np.atleast_2d(np.asarray(x, dtype=float))
    return np.linalg.norm(points - project_sdelta(points, body, tol), axis=1)
