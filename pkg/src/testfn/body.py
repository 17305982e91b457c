"""
The convex body S_delta behind the comparison test function.

S_delta = { x : x_i >= -delta for all i, xi.x <= theta_{#xi} for xi in Xi* },
where Xi* holds the 2^d - 1 vectors with entries in {1, alpha_i} and at least
one entry equal to 1, #xi counts the ones, and 1 = theta_1 < ... < theta_d
satisfy theta_1 > (d - 1 + max alpha) / d * theta_d.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..model.errors import ConstraintViolationError, DimensionError, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_SPREAD = 0.9
STRICT_MARGIN = 1e-12
MAX_DELTA_HALVINGS = 10
STRUCTURE_SAMPLES = 1000
MAX_DIMENSION = 8


@dataclass(frozen=True, eq=False)
class ConvexBody:
    d: int
    alpha: np.ndarray
    delta: float
    epsilon: float
    thetas: np.ndarray
    xis: np.ndarray
    xi_counts: np.ndarray
    structure_verified: Optional[bool] = field(default=None)

    @property
    def xi_thresholds(self) -> np.ndarray:
        """theta_{#xi} for every row of xis"""
        return self.thetas[self.xi_counts - 1]

    def halfspaces(self):
        """
        Rows a, b with S_delta = { x : a.x <= b }; the Xi* rows come first,
        then -e_i with bound delta
        """
        A = np.vstack([self.xis, -np.eye(self.d)])
        b = np.concatenate([self.xi_thresholds, np.full(self.d, self.delta)])
        return A, b

    @property
    def inner_radius(self) -> float:
        """Radius of a ball around 0 inside S_delta"""
        return float(min(self.delta, np.min(self.xi_thresholds / np.linalg.norm(self.xis, axis=1))))

    @property
    def outer_radius(self) -> float:
        """Radius of a ball around 0 containing S_delta"""
        return float(np.sqrt(self.d) * (self.thetas[-1] + (self.d - 1) * self.delta))

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "alpha": self.alpha.tolist(),
            "delta": self.delta,
            "epsilon": self.epsilon,
            "thetas": self.thetas.tolist(),
            "xis": self.xis.tolist(),
            "xi_counts": self.xi_counts.tolist(),
            "structure_verified": self.structure_verified,
        }


def max_uniform_gap(d: int, max_alpha: float) -> float:
    """Largest uniform theta spacing with theta_1 >= (d-1+a)/d * theta_d"""
    if d == 1:
        return 0.0
    return (1.0 - max_alpha) / ((d - 1) * (d - 1 + max_alpha))


def enumerate_xis(alpha: np.ndarray):
    """Xi* and the count of ones of each element"""
    d = alpha.size
    rows, counts = [], []
    for mask in itertools.product([False, True], repeat=d):
        if not any(mask):
            continue
        rows.append(np.where(mask, 1.0, alpha))
        counts.append(sum(mask))
    return np.asarray(rows), np.asarray(counts, dtype=int)


def member_sdelta(x, body: ConvexBody) -> bool:
    """Exact membership in S_delta"""
    x = np.asarray(x, dtype=float)
    if x.shape != (body.d,):
        raise DimensionError(f"point must have shape ({body.d},), got {x.shape}")
    if np.any(x < -body.delta):
        return False
    return bool(np.all(body.xis @ x <= body.xi_thresholds))


def _assemble(d, alpha, delta, epsilon, thetas, xis, counts, verified=None) -> ConvexBody:
    for array in (alpha, thetas, xis, counts):
        array.setflags(write=False)
    return ConvexBody(
        d=d,
        alpha=alpha,
        delta=float(delta),
        epsilon=float(epsilon),
        thetas=thetas,
        xis=xis,
        xi_counts=counts,
        structure_verified=verified,
    )


def build_body(
    d: int,
    alpha,
    delta: Optional[float] = None,
    epsilon: Optional[float] = None,
    spread: float = DEFAULT_SPREAD,
    seed: int = 0,
) -> ConvexBody:
    """
    Build S_delta and its fattening width

    Args:
        d: Dimension (at most 8)
        alpha: Budgets, max below 1
        delta: Offset of the shifted orthant. When omitted, starts at
            0.05 / (1 + d) and is halved (up to 10 times) until the face
            structure check passes on sampled boundary points.
        epsilon: Fattening width in (0, delta); delta / 2 when omitted
        spread: Fraction of the largest feasible theta spacing, in (0, 1)
        seed: Seed for the boundary samples of the structure check

    Raises:
        ConstraintViolationError: budgets or theta spacing infeasible
        PreconditionError: delta, epsilon or spread out of range
    """
    alpha = np.array(alpha, dtype=float)
    if alpha.shape != (d,):
        raise DimensionError(f"alpha must have shape ({d},), got {alpha.shape}")
    if d > MAX_DIMENSION:
        raise PreconditionError(f"d={d} exceeds the supported {MAX_DIMENSION}")
    a = float(alpha.max())
    if a >= 1.0 or np.any(alpha < 0):
        raise ConstraintViolationError(f"budgets must lie in [0, 1), got max {a}")
    if not 0.0 < spread <= 1.0:
        raise PreconditionError(f"spread must lie in (0, 1], got {spread}")

    eta = spread * max_uniform_gap(d, a)
    thetas = 1.0 + np.arange(d) * eta
    if d > 1 and not thetas[0] > (d - 1 + a) / d * thetas[-1] + STRICT_MARGIN:
        raise ConstraintViolationError(
            f"theta spacing infeasible: theta_1 = {thetas[0]} not above {(d - 1 + a) / d * thetas[-1]} (spread={spread})"
        )
    xis, counts = enumerate_xis(alpha)

    if delta is not None:
        eps = delta / 2.0 if epsilon is None else epsilon
        if not 0.0 < eps < delta:
            raise PreconditionError(f"need 0 < epsilon < delta, got epsilon={eps}, delta={delta}")
        body = _assemble(d, alpha, delta, eps, thetas, xis, counts)
        logger.info(f"[TESTFN] Built body d={d}, delta={delta:.4g}, epsilon={eps:.4g}, thetas={np.round(thetas, 6).tolist()}")
        return body

    from .signs import structure_violations  # signs imports this module

    trial = 0.05 * thetas[0] / (1.0 + d)
    body = None
    for attempt in range(MAX_DELTA_HALVINGS + 1):
        eps = trial / 2.0 if epsilon is None else min(epsilon, trial / 2.0)
        candidate = _assemble(d, alpha.copy(), trial, eps, thetas.copy(), xis.copy(), counts.copy())
        violations = structure_violations(candidate, STRUCTURE_SAMPLES, seed)
        if violations == 0:
            body = _assemble(d, alpha, trial, eps, thetas, xis, counts, verified=True)
            break
        logger.warning(f"[TESTFN] Face structure violated at {violations} samples with delta={trial:.4g}; halving")
        trial /= 2.0
    if body is None:
        body = _assemble(d, alpha, trial * 2.0, eps, thetas, xis, counts, verified=False)
        logger.warning("[TESTFN] No delta passed the face structure check; body flagged as unverified")
    logger.info(
        f"[TESTFN] Built body d={d}, delta={body.delta:.4g}, epsilon={body.epsilon:.4g}, thetas={np.round(thetas, 6).tolist()}"
    )
    return body
