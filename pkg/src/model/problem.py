"""
Problem instance: dimension, reflection budgets, drift, diffusion, discount,
running cost and linear boundary cost.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ProblemConfig
from .descriptors import ConstantDrift, CostDescriptor, DriftDescriptor
from .errors import DimensionError, PreconditionError

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """
    Full instance of the controlled reflected diffusion.

    Attributes:
        d: State dimension
        alpha: Reflection budgets, shape (d,)
        drift: Drift descriptor; evaluated through `drift_at`, which clamps to [-K, K]
        sigma: Diffusion matrix, shape (d, d)
        beta: Discount rate
        running_cost: Running cost descriptor carrying growth degree m and constant c_l
        boundary_cost: Vector c encoding h_i(M) = c.M e_i, shape (d,)
        lipschitz_bound: Declared bound K for the drift
    """

    d: int
    alpha: np.ndarray
    drift: DriftDescriptor
    sigma: np.ndarray
    beta: float
    running_cost: CostDescriptor
    boundary_cost: np.ndarray = field(default=None)
    lipschitz_bound: float = 1.0
    name: Optional[str] = None

    def __post_init__(self):
        d = self.d
        if not isinstance(d, (int, np.integer)) or d < 1:
            raise DimensionError(f"Dimension must be a positive integer, got {d!r}")
        object.__setattr__(self, "alpha", _frozen(self.alpha))
        object.__setattr__(self, "sigma", _frozen(np.atleast_2d(self.sigma)))
        c = np.zeros(d) if self.boundary_cost is None else self.boundary_cost
        object.__setattr__(self, "boundary_cost", _frozen(c))

        if self.alpha.shape != (d,):
            raise DimensionError(f"alpha must have shape ({d},), got {self.alpha.shape}")
        if self.sigma.shape != (d, d):
            raise DimensionError(f"sigma must have shape ({d}, {d}), got {self.sigma.shape}")
        if self.boundary_cost.shape != (d,):
            raise DimensionError(f"boundary_cost must have shape ({d},), got {self.boundary_cost.shape}")
        if self.drift.dimension() != d:
            raise DimensionError(f"drift descriptor has dimension {self.drift.dimension()}, expected {d}")
        if self.running_cost.dimension() != d:
            raise DimensionError(f"running cost has dimension {self.running_cost.dimension()}, expected {d}")

    @classmethod
    def from_config(cls, config: ProblemConfig) -> "ProblemSpec":
        return cls(
            d=config.d,
            alpha=np.asarray(config.alpha, dtype=float),
            drift=config.drift,
            sigma=np.asarray(config.sigma, dtype=float),
            beta=float(config.beta),
            running_cost=config.running_cost,
            boundary_cost=None if config.boundary_cost is None else np.asarray(config.boundary_cost, dtype=float),
            lipschitz_bound=float(config.lipschitz_bound),
            name=config.name,
        )

    def to_config(self) -> ProblemConfig:
        return ProblemConfig(
            name=self.name,
            d=self.d,
            alpha=self.alpha.tolist(),
            drift=self.drift,
            sigma=self.sigma.tolist(),
            beta=self.beta,
            running_cost=self.running_cost,
            boundary_cost=self.boundary_cost.tolist() if np.any(self.boundary_cost) else None,
            lipschitz_bound=self.lipschitz_bound,
        )

    @property
    def max_alpha(self) -> float:
        return float(np.max(self.alpha))

    @property
    def covariance(self) -> np.ndarray:
        """A = sigma sigma^T"""
        return self.sigma @ self.sigma.T

    def drift_at(self, x: np.ndarray) -> np.ndarray:
        """Drift clamped componentwise to [-K, K]"""
        K = self.lipschitz_bound
        return np.clip(self.drift(x), -K, K)

    def cost_at(self, x: np.ndarray) -> np.ndarray:
        return self.running_cost(x)

    def check_index(self, i: int) -> int:
        if not 0 <= int(i) < self.d:
            raise PreconditionError(f"Coordinate index {i} out of range for d={self.d}")
        return int(i)

    def check_state(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DimensionError(f"State must have shape ({self.d},), got {x.shape}")
        return x

    def with_changes(self, **changes) -> "ProblemSpec":
        """Copy with selected fields replaced (used for test hooks like sigma=0)"""
        values = {
            "d": self.d,
            "alpha": self.alpha,
            "drift": self.drift,
            "sigma": self.sigma,
            "beta": self.beta,
            "running_cost": self.running_cost,
            "boundary_cost": self.boundary_cost,
            "lipschitz_bound": self.lipschitz_bound,
            "name": self.name,
        }
        values.update(changes)
        return ProblemSpec(**values)

    def __str__(self):
        return (
            f"ProblemSpec(name={self.name!r}, d={self.d}, alpha={self.alpha.tolist()}, "
            f"beta={self.beta}, drift={self.drift.kind}, cost={self.running_cost.kind})"
        )


def zero_drift(d: int) -> ConstantDrift:
    return ConstantDrift(b0=[0.0] * d)
