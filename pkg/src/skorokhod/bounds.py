"""
A priori bound on the pushing process:

    sum_i Y_i(t) <= (|b|_1 t + sum_i beta_i(t)) / (1 - max alpha),
    beta_i(t) = sup_{s <= t} (-w_i(s))^+.

|b|_1 is taken as sum_i sup_k |b_i(X(t_k))| along the solved path.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..model.errors import DimensionError
from .paths import DrivingPath, PathPair

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-9


@dataclass
class BoundReport:
    max_violation: float
    tightest_ratio: float
    worst_time: float
    holds: bool

    def to_dict(self) -> dict:
        return {
            "max_violation": self.max_violation,
            "tightest_ratio": self.tightest_ratio,
            "worst_time": self.worst_time,
            "holds": self.holds,
        }


def check_reflection_bound(pair: PathPair, driver: DrivingPath, spec) -> BoundReport:
    if not pair.grid.matches(driver.grid) or pair.d != driver.d:
        raise DimensionError("pair and driver do not share grid and dimension")

    t = pair.grid.t
    beta_run = np.maximum.accumulate(np.maximum(-driver.w, 0.0), axis=0).sum(axis=1)
    b_sup = np.abs(spec.drift_at(pair.x[:-1])).max(axis=0).sum() if pair.grid.n_steps else 0.0
    rhs = (b_sup * t + beta_run) / (1.0 - spec.max_alpha)
    lhs = pair.y.sum(axis=1)

    gap = lhs - rhs
    worst = int(np.argmax(gap))
    positive = rhs > 0
    ratio = float(np.max(lhs[positive] / rhs[positive])) if np.any(positive) else 0.0
    holds = bool(gap[worst] <= BOUND_SLACK)
    if not holds:
        logger.warning(f"[SKOROKHOD] Pushing bound violated by {gap[worst]:.3e} at t={t[worst]:.4g}")
    return BoundReport(
        max_violation=float(gap[worst]),
        tightest_ratio=ratio,
        worst_time=float(t[worst]),
        holds=holds,
    )
