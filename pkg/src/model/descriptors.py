"""
Drift and running-cost descriptors.

Descriptors are pydantic models so they load straight from a problem config;
they are also callables evaluating on arrays of shape (..., d).
"""

import logging
from typing import Annotated, Callable, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import PreconditionError

logger = logging.getLogger(__name__)

DriftCallback = Callable[[np.ndarray], np.ndarray]

# Registry for tabulated drifts referenced by id from config files
_DRIFT_CALLBACKS: Dict[str, DriftCallback] = {}


def register_drift(drift_id: str):
    """
    Decorator registering a vectorized drift b(x) under an id

    Args:
        drift_id: Name used by `callback` drift descriptors

    Returns:
        The decorator; the wrapped function is returned unchanged
    """

    def decorator(fn: DriftCallback) -> DriftCallback:
        if drift_id in _DRIFT_CALLBACKS:
            logger.warning(f"[MODEL] Replacing registered drift '{drift_id}'")
        _DRIFT_CALLBACKS[drift_id] = fn
        return fn

    return decorator


def get_drift_callback(drift_id: str) -> DriftCallback:
    try:
        return _DRIFT_CALLBACKS[drift_id]
    except KeyError:
        known = ", ".join(sorted(_DRIFT_CALLBACKS)) or "none"
        raise PreconditionError(f"Unknown drift callback '{drift_id}' (registered: {known})") from None


@register_drift("zero")
def _zero_drift(x: np.ndarray) -> np.ndarray:
    return np.zeros_like(x, dtype=float)


@register_drift("pull_to_origin")
def _pull_to_origin(x: np.ndarray) -> np.ndarray:
    return -np.asarray(x, dtype=float)


class _Descriptor(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ConstantDrift(_Descriptor):
    kind: Literal["constant"] = "constant"
    b0: List[float] = Field(..., description="Constant drift vector")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.b0, dtype=float), x.shape).copy()

    def dimension(self) -> int:
        return len(self.b0)


class AffineSaturatedDrift(_Descriptor):
    """b(x) = b0 + B x; the problem clamps it to [-K, K]"""

    kind: Literal["affine_saturated"] = "affine_saturated"
    b0: List[float]
    B: List[List[float]]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.asarray(self.b0, dtype=float) + x @ np.asarray(self.B, dtype=float).T

    def dimension(self) -> int:
        return len(self.b0)


class CallbackDrift(_Descriptor):
    kind: Literal["callback"] = "callback"
    id: str = Field(..., description="Registered drift id")
    d: int = Field(..., ge=1, description="State dimension the callback is used with")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(get_drift_callback(self.id)(np.asarray(x, dtype=float)), dtype=float)

    def dimension(self) -> int:
        return self.d


DriftDescriptor = Annotated[
    Union[ConstantDrift, AffineSaturatedDrift, CallbackDrift],
    Field(discriminator="kind"),
]


class _CostBase(_Descriptor):
    growth_degree: float = Field(2.0, ge=0, description="Declared growth degree m")
    growth_constant: float = Field(1.0, gt=0, description="Declared growth constant c_l")

    def minimizer_scale(self) -> float:
        return 0.0


class LinearCost(_CostBase):
    kind: Literal["linear"] = "linear"
    w: List[float]
    growth_degree: float = Field(1.0, ge=0)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ np.asarray(self.w, dtype=float)

    def dimension(self) -> int:
        return len(self.w)


class QuadraticCost(_CostBase):
    """l(x) = x'Qx + w.x + k"""

    kind: Literal["quadratic"] = "quadratic"
    Q: List[List[float]]
    w: Optional[List[float]] = None
    k: float = 0.0

    def _arrays(self):
        Q = np.asarray(self.Q, dtype=float)
        w = np.zeros(Q.shape[0]) if self.w is None else np.asarray(self.w, dtype=float)
        return Q, w

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        Q, w = self._arrays()
        return np.einsum("...i,ij,...j->...", x, Q, x) + x @ w + self.k

    def dimension(self) -> int:
        return len(self.Q)

    def minimizer_scale(self) -> float:
        # unconstrained minimizer -Q^{-1}w/2 clipped to the orthant
        try:
            Q, w = self._arrays()
            x_star = -0.5 * np.linalg.solve(Q, w)
        except np.linalg.LinAlgError:
            return 0.0
        return float(np.linalg.norm(np.clip(x_star, 0.0, None)))


class MonomialTerm(_Descriptor):
    coefficient: float
    powers: List[int] = Field(..., description="Exponent per coordinate")


class MonomialCost(_CostBase):
    kind: Literal["monomial"] = "monomial"
    terms: List[MonomialTerm]
    d: int = Field(..., ge=1)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape[:-1])
        for term in self.terms:
            total = total + term.coefficient * np.prod(x ** np.asarray(term.powers), axis=-1)
        return total

    def dimension(self) -> int:
        return self.d


CostDescriptor = Annotated[
    Union[LinearCost, QuadraticCost, MonomialCost],
    Field(discriminator="kind"),
]
