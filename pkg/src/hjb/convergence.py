"""
Grid-convergence audit: solve at h, h/2 and h/4 and estimate the order.
"""

import logging
from dataclasses import asdict, dataclass
from typing import List

import numpy as np

from ..model.errors import PreconditionError
from .grid import OrthantGrid
from .solver import DEFAULT_TOL, solve_hjb

logger = logging.getLogger(__name__)

ORDER_BAND = (0.8, 2.2)


@dataclass
class ConvergenceReport:
    L: float
    hs: List[float]
    differences: List[float]
    order: float
    values_at_origin: List[float]

    @property
    def in_band(self) -> bool:
        return bool(ORDER_BAND[0] <= self.order <= ORDER_BAND[1])

    @property
    def contraction(self) -> float:
        """diff(h) / diff(h/2); nan when the finer difference vanishes"""
        coarse, fine = self.differences
        return coarse / fine if fine > 0 else float("nan")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["in_band"] = self.in_band
        return out


def _coarse_difference(coarse: np.ndarray, fine: np.ndarray) -> float:
    """Sup-difference on the coarse lattice; fine has twice the resolution"""
    sampled = fine[(slice(None, None, 2),) * fine.ndim]
    return float(np.abs(coarse - sampled).max())


def richardson_check(spec, L: float, h: float, tol: float = DEFAULT_TOL) -> ConvergenceReport:
    """
    Solve at h, h/2 and h/4 on [0, L]^d

    The differences are taken on the coarse lattice of each pair and the
    order is log2(diff(h, h/2) / diff(h/2, h/4)); it is nan when both
    differences vanish.
    """
    if h <= 0 or L <= 0:
        raise PreconditionError(f"L and h must be positive, got L={L}, h={h}")
    hs = [h, h / 2.0, h / 4.0]
    fields = [solve_hjb(spec, OrthantGrid(spec.d, L, step), tol=tol) for step in hs]
    values = [f.values for f in fields]
    differences = [_coarse_difference(values[0], values[1]), _coarse_difference(values[1], values[2])]

    with np.errstate(divide="ignore", invalid="ignore"):
        order = float(np.log2(differences[0] / differences[1])) if differences[1] > 0 else float("nan")
    if differences[0] == 0.0 and differences[1] == 0.0:
        order = float("nan")

    report = ConvergenceReport(
        L=L,
        hs=hs,
        differences=differences,
        order=order,
        values_at_origin=[float(v.reshape(-1)[0]) for v in values],
    )
    if np.isnan(order) or report.in_band:
        logger.info(f"[HJB] Richardson differences {differences[0]:.3e}, {differences[1]:.3e}; order {order:.3f}")
    else:
        logger.warning(f"[HJB] Richardson order {order:.3f} outside {ORDER_BAND} (differences {differences})")
    return report
