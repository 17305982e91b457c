"""
Gauge of the fattened body S_delta^eps = { x : dist(x, S_delta) <= eps }
and the test function phi = rho^2.

rho(y) = 1 / mu where mu solves dist(mu y, S_delta) = eps. The distance is
convex and increasing in mu past the body, so Newton from the outer radius
converges monotonically; a bisection step on the bracket
[r_in / |y|, R_out / |y|] replaces any Newton step that leaves it.
"""

import logging

import numpy as np

from ..model.errors import IterationCapError, PreconditionError
from .body import ConvexBody
from .projection import project_sdelta

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_ROOT_ITER = 200
ORIGIN_TOL = 0.0


def _as_batch(y) -> tuple:
    points = np.asarray(y, dtype=float)
    single = points.ndim == 1
    return np.atleast_2d(points), single


def _solve_scale(points: np.ndarray, body: ConvexBody, tol: float):
    """
    mu per point with dist(mu y, S_delta) = eps, plus the projection of mu y

    Points must be nonzero.
    """
    eps = body.epsilon
    norms = np.linalg.norm(points, axis=1)
    lo = (body.inner_radius + eps) / norms
    hi = (body.outer_radius + eps) / norms
    mu = hi.copy()
    active = np.ones(points.shape[0], dtype=bool)

    for _ in range(MAX_ROOT_ITER):
        z = mu[active, None] * points[active]
        pi = project_sdelta(z, body)
        gap = z - pi
        dist = np.linalg.norm(gap, axis=1)
        g = dist - eps

        idx = np.flatnonzero(active)
        # maintain the bracket: g > 0 means mu is too large
        hi[idx] = np.where(g > 0, mu[idx], hi[idx])
        lo[idx] = np.where(g <= 0, mu[idx], lo[idx])

        slope = np.einsum("ij,ij->i", gap, points[active]) / np.where(dist > 0, dist, 1.0)
        newton = mu[idx] - g / np.where(slope > 0, slope, np.inf)
        inside = (dist > 0) & (slope > 0) & (newton > lo[idx]) & (newton < hi[idx])
        step = np.where(inside, newton, 0.5 * (lo[idx] + hi[idx]))

        done = np.abs(step - mu[idx]) <= tol * mu[idx]
        mu[idx] = step
        active[idx[done]] = False
        if not active.any():
            break
    else:
        raise IterationCapError(f"gauge root search exceeded {MAX_ROOT_ITER} iterations")

    projection = project_sdelta(mu[:, None] * points, body)
    return mu, projection


def gauge(y, body: ConvexBody, tol: float = DEFAULT_TOL):
    """
    Minkowski gauge of S_delta^eps

    Args:
        y: Point (d,) or batch (n, d)
        body: The convex body
        tol: Relative tolerance on the gauge value

    Returns:
        rho(y); 0 at the origin
    """
    if tol <= 0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    points, single = _as_batch(y)
    rho = np.zeros(points.shape[0])
    nonzero = np.linalg.norm(points, axis=1) > ORIGIN_TOL
    if nonzero.any():
        mu, _ = _solve_scale(points[nonzero], body, tol)
        rho[nonzero] = 1.0 / mu
    return float(rho[0]) if single else rho


def gauge_with_gradient(y, body: ConvexBody, tol: float = DEFAULT_TOL):
    """
    rho and D rho for nonzero points

    With z = y / rho(y) on the boundary of S_delta^eps and n the unit outward
    normal (z - pi(z)) / |z - pi(z)|, D rho(y) = n / (n . z).

    Raises:
        PreconditionError: y = 0, or z not strictly outside S_delta
    """
    points, single = _as_batch(y)
    if np.any(np.linalg.norm(points, axis=1) <= ORIGIN_TOL):
        raise PreconditionError("gauge gradient is undefined at the origin")
    mu, pi = _solve_scale(points, body, tol)
    z = mu[:, None] * points
    gap = z - pi
    dist = np.linalg.norm(gap, axis=1)
    if np.any(dist < tol):
        raise PreconditionError("scaled point is not strictly outside S_delta; normal undefined")
    normal = gap / dist[:, None]
    grad = normal / np.einsum("ij,ij->i", normal, z)[:, None]
    rho = 1.0 / mu
    if single:
        return float(rho[0]), grad[0]
    return rho, grad


def gauge_gradient(y, body: ConvexBody, tol: float = DEFAULT_TOL):
    return gauge_with_gradient(y, body, tol)[1]


def phi(y, body: ConvexBody, tol: float = DEFAULT_TOL):
    """Test function rho^2; x^2 in one dimension"""
    points, single = _as_batch(y)
    if body.d == 1:
        values = points[:, 0] ** 2
    else:
        values = np.atleast_1d(gauge(points, body, tol)) ** 2
    return float(values[0]) if single else values


def phi_gradient(y, body: ConvexBody, tol: float = DEFAULT_TOL):
    """2 rho D rho; exactly 0 at the origin, 2x in one dimension"""
    points, single = _as_batch(y)
    grads = np.zeros_like(points)
    if body.d == 1:
        grads = 2.0 * points
    else:
        nonzero = np.linalg.norm(points, axis=1) > ORIGIN_TOL
        if nonzero.any():
            rho, grad = gauge_with_gradient(points[nonzero], body, tol)
            grads[nonzero] = 2.0 * np.asarray(rho)[:, None] * grad
    return grads[0] if single else grads
