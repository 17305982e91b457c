"""
Reflection matrices M = I - P and their budget set.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import ConstraintViolationError, DimensionError

logger = logging.getLogger(__name__)

BUDGET_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ReflectionMatrix:
    """
    Element of the budget set: P has zero diagonal, nonnegative entries and
    column sums bounded by the budgets. Column i of M = I - P is the direction
    used when coordinate i is pushed.
    """

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise DimensionError(f"P must be square, got shape {p.shape}")
        if np.any(np.diag(p) != 0.0):
            raise ConstraintViolationError("P must have a zero diagonal")
        if np.any(p < 0.0):
            raise ConstraintViolationError("P must be entrywise nonnegative")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def identity(cls, d: int) -> "ReflectionMatrix":
        return cls(np.zeros((d, d)))

    @property
    def d(self) -> int:
        return self.p.shape[0]

    @property
    def m(self) -> np.ndarray:
        return np.eye(self.d) - self.p

    def column(self, i: int) -> np.ndarray:
        return self.m[:, i]

    def column_sums(self) -> np.ndarray:
        return self.p.sum(axis=0)

    def satisfies(self, alpha: np.ndarray, tol: float = BUDGET_TOL) -> bool:
        return bool(np.all(self.column_sums() <= np.asarray(alpha) + tol))

    def check_budget(self, alpha: np.ndarray, tol: float = BUDGET_TOL) -> "ReflectionMatrix":
        """Raise unless every column sum of P stays within its budget"""
        alpha = np.asarray(alpha, dtype=float)
        if alpha.shape != (self.d,):
            raise DimensionError(f"alpha must have shape ({self.d},), got {alpha.shape}")
        excess = self.column_sums() - alpha
        bad = np.flatnonzero(excess > tol)
        if bad.size:
            i = int(bad[0])
            raise ConstraintViolationError(
                f"column {i} of P sums to {self.column_sums()[i]:.6g} > alpha[{i}] = {alpha[i]:.6g}"
            )
        return self

    def __eq__(self, other):
        if not isinstance(other, ReflectionMatrix):
            return NotImplemented
        return self.p.shape == other.p.shape and bool(np.array_equal(self.p, other.p))

    def __hash__(self):
        return hash(self.p.tobytes())

    def __repr__(self):
        return f"ReflectionMatrix(p={self.p.tolist()})"


def column_targets(alpha: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """
    Build P from one push target per column

    Args:
        alpha: Budgets, shape (d,)
        targets: Per column i, the row receiving alpha_i, or -1 for an empty column.
            Shape (..., d) for a batch.

    Returns:
        P with shape targets.shape + (d,) rearranged to (..., d, d)
    """
    alpha = np.asarray(alpha, dtype=float)
    targets = np.asarray(targets, dtype=int)
    d = alpha.shape[0]
    rows = np.arange(d)
    # onehot[..., j, i] = 1 when column i pushes row j
    onehot = (targets[..., None, :] == rows[:, None]).astype(float)
    return onehot * alpha


def vertex_matrices(spec) -> List[ReflectionMatrix]:
    """
    Enumerate the d**d vertex matrices: every column i is zero or alpha_i e_j, j != i

    Order is lexicographic over columns with the zero column first, so index 0
    is always the identity.
    """
    d = spec.d
    choices = [[-1] + [j for j in range(d) if j != i] for i in range(d)]
    matrices = [
        ReflectionMatrix(column_targets(spec.alpha, np.array(combo)))
        for combo in itertools.product(*choices)
    ]
    logger.debug(f"[MODEL] Enumerated {len(matrices)} vertex matrices for d={d}")
    return matrices
