"""
Truncated orthant lattice {0, h, ..., L}^d.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..model.errors import DimensionError, PreconditionError

logger = logging.getLogger(__name__)

MAX_NODES = 10_000_000
DEFAULT_CELLS = 200
TRUNCATION_FACTOR = 8.0
INTEGRAL_TOL = 1e-9


@dataclass(frozen=True)
class OrthantGrid:
    d: int
    L: float
    h: float

    def __post_init__(self):
        if self.d < 1:
            raise DimensionError(f"d must be >= 1, got {self.d}")
        if self.h <= 0 or self.L <= 0:
            raise PreconditionError(f"L and h must be positive, got L={self.L}, h={self.h}")
        cells = self.L / self.h
        if abs(cells - round(cells)) > INTEGRAL_TOL * max(1.0, cells):
            raise DimensionError(f"L/h must be an integer, got {cells}")
        if round(cells) < 2:
            raise DimensionError(f"need at least 2 cells per axis, got {round(cells)}")
        if self.n_nodes > MAX_NODES:
            raise DimensionError(f"{self.n_nodes} nodes exceed the {MAX_NODES} guard")

    @property
    def cells(self) -> int:
        return int(round(self.L / self.h))

    @property
    def n_axis(self) -> int:
        return self.cells + 1

    @property
    def shape(self) -> tuple:
        return (self.n_axis,) * self.d

    @property
    def n_nodes(self) -> int:
        return self.n_axis**self.d

    @cached_property
    def axis(self) -> np.ndarray:
        return np.arange(self.n_axis) * self.h

    @cached_property
    def strides(self) -> np.ndarray:
        """Flat-index offset of +e_i (C order)"""
        return self.n_axis ** np.arange(self.d - 1, -1, -1)

    @cached_property
    def multi_index(self) -> np.ndarray:
        """Lattice coordinates k of every node, shape (n_nodes, d)"""
        return np.indices(self.shape).reshape(self.d, -1).T

    def coordinates(self) -> np.ndarray:
        return self.multi_index * self.h

    def refined(self, factor: int = 2) -> "OrthantGrid":
        return OrthantGrid(self.d, self.L, self.h / factor)

    def to_dict(self) -> dict:
        return {"d": self.d, "L": self.L, "h": self.h, "n_axis": self.n_axis}


def default_grid(spec, cells: int = DEFAULT_CELLS) -> OrthantGrid:
    """L = 8 (scale of the cost minimizer + 1/sqrt(beta)), h = L / cells"""
    L = TRUNCATION_FACTOR * (spec.running_cost.minimizer_scale() + 1.0 / np.sqrt(spec.beta))
    grid = OrthantGrid(spec.d, float(L), float(L) / cells)
    logger.debug(f"[HJB] Default grid L={grid.L:.4g}, h={grid.h:.4g}, {grid.n_nodes} nodes")
    return grid
