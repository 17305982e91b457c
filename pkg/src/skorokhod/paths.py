"""
Discretized path carriers: time grid, driving noise, control path, solved pair.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from ..model.errors import ConstraintViolationError, DimensionError, PreconditionError
from ..model.reflection import ReflectionMatrix

logger = logging.getLogger(__name__)

GRID_TOL = 1e-12


def _readonly(array, dtype=float) -> np.ndarray:
    array = np.array(array, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Uniform grid t_0 = 0 < t_1 < ... < t_n = T"""

    t: np.ndarray

    def __post_init__(self):
        t = _readonly(self.t)
        if t.ndim != 1 or t.size < 2:
            raise DimensionError("TimeGrid needs at least two points")
        if t[0] != 0.0:
            raise PreconditionError(f"TimeGrid must start at 0, got {t[0]}")
        steps = np.diff(t)
        if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > GRID_TOL:
            raise PreconditionError("TimeGrid must be strictly increasing with a uniform step")
        object.__setattr__(self, "t", t)

    @classmethod
    def uniform(cls, horizon: float, dt: float) -> "TimeGrid":
        if dt <= 0 or horizon <= 0:
            raise PreconditionError(f"horizon and dt must be positive, got T={horizon}, dt={dt}")
        n = int(round(horizon / dt))
        if n < 1:
            raise PreconditionError(f"horizon {horizon} shorter than one step {dt}")
        return cls(np.arange(n + 1) * dt)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    @property
    def n_steps(self) -> int:
        return self.t.size - 1

    def steps_until(self, time: float) -> int:
        """Number of steps covering [0, time], at least one"""
        if time <= 0:
            raise PreconditionError(f"time must be positive, got {time}")
        k = max(1, int(round(time / self.dt)))
        if k > self.n_steps:
            raise PreconditionError(f"time {time} beyond grid horizon {self.horizon}")
        return k

    def matches(self, other: "TimeGrid") -> bool:
        return self.t.shape == other.t.shape and bool(np.allclose(self.t, other.t, rtol=0.0, atol=GRID_TOL))


@dataclass(frozen=True, eq=False)
class DrivingPath:
    """Samples w(t_k) of the noise term sigma W(t) plus the start state"""

    grid: TimeGrid
    w: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        w = _readonly(self.w)
        x0 = _readonly(self.x0)
        if w.ndim != 2 or w.shape[0] != self.grid.t.size:
            raise DimensionError(f"w must have shape ({self.grid.t.size}, d), got {w.shape}")
        if x0.shape != (w.shape[1],):
            raise DimensionError(f"x0 must have shape ({w.shape[1]},), got {x0.shape}")
        if np.any(w[0] != 0.0):
            raise PreconditionError("driving path must start at w[0] = 0")
        if np.any(x0 < 0.0):
            raise PreconditionError("x0 must lie in the orthant")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "x0", x0)

    @property
    def d(self) -> int:
        return self.w.shape[1]


@dataclass(frozen=True, eq=False)
class ControlPath:
    """Piecewise-constant reflection matrices; p[k] acts on [t_k, t_{k+1})"""

    grid: TimeGrid
    p: np.ndarray

    def __post_init__(self):
        p = _readonly(self.p)
        n = self.grid.n_steps
        if p.ndim != 3 or p.shape[0] != n or p.shape[1] != p.shape[2]:
            raise DimensionError(f"control must have shape ({n}, d, d), got {p.shape}")
        object.__setattr__(self, "p", p)

    @classmethod
    def constant(cls, grid: TimeGrid, matrix: ReflectionMatrix) -> "ControlPath":
        return cls(grid, np.broadcast_to(matrix.p, (grid.n_steps,) + matrix.p.shape))

    @property
    def d(self) -> int:
        return self.p.shape[1]

    def matrix(self, k: int) -> ReflectionMatrix:
        return ReflectionMatrix(self.p[k])

    def validate(self, alpha: np.ndarray, tol: float = 1e-12) -> "ControlPath":
        """Check the budget constraints at every step"""
        diag = np.einsum("kii->ki", self.p)
        if np.any(diag != 0.0) or np.any(self.p < 0.0):
            raise ConstraintViolationError("control matrices need a zero diagonal and nonnegative entries")
        sums = self.p.sum(axis=1)
        bad = np.argwhere(sums > np.asarray(alpha) + tol)
        if bad.size:
            k, i = bad[0]
            raise ConstraintViolationError(f"control at step {k}: column {i} exceeds alpha[{i}]")
        return self


@dataclass(frozen=True, eq=False)
class PathPair:
    """
    Solved pair on the grid.

    x stays in the orthant, y starts at 0 and is nondecreasing. `distances`
    keeps the Picard distance sequence of every window for audits.
    """

    grid: TimeGrid
    x: np.ndarray
    y: np.ndarray
    iterations: int = 0
    final_distance: float = 0.0
    distances: List[List[float]] = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def complementarity(self) -> np.ndarray:
        """Per coordinate sum of x_i(t_{k+1}) * (y_i(t_{k+1}) - y_i(t_k))"""
        return np.sum(self.x[1:] * np.diff(self.y, axis=0), axis=0)

    def to_frame(self) -> pd.DataFrame:
        columns = {"t": self.grid.t}
        for i in range(self.d):
            columns[f"x_{i + 1}"] = self.x[:, i]
        for i in range(self.d):
            columns[f"y_{i + 1}"] = self.y[:, i]
        return pd.DataFrame(columns)


def default_comp_tol(grid: TimeGrid, driver: DrivingPath, beta_max: Optional[float] = None) -> float:
    """10 dt (1 + |x0| + max_i beta_i(T))"""
    if beta_max is None:
        beta_max = float(np.max(np.maximum(-driver.w, 0.0)))
    return 10.0 * grid.dt * (1.0 + float(np.linalg.norm(driver.x0)) + beta_max)
