"""
Markov control policies for the reflected diffusion.

A PolicyDescriptor names a policy; `resolve_policy` turns it into a
Controller that maps a batch of states to reflection matrices.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional, Union

import numpy as np

from ..model.errors import DimensionError, PreconditionError
from ..model.reflection import ReflectionMatrix, column_targets, vertex_matrices

logger = logging.getLogger(__name__)

# Feedback callbacks map states (n, d) and budgets (d,) to P stacks (n, d, d)
PolicyCallback = Callable[[np.ndarray, np.ndarray], np.ndarray]

_POLICY_CALLBACKS: Dict[str, PolicyCallback] = {}


class PolicyKind(str, Enum):
    CONSTANT_VERTEX = "constant_vertex"
    FEEDBACK_ARGMIN = "feedback_argmin"
    FEEDBACK_CALLBACK = "feedback_callback"


def register_policy(policy_id: str):
    """Decorator registering a feedback callback under an id"""

    def decorator(fn: PolicyCallback) -> PolicyCallback:
        _POLICY_CALLBACKS[policy_id] = fn
        return fn

    return decorator


@register_policy("identity")
def _identity_policy(x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    n, d = x.shape
    return np.zeros((n, d, d))


@register_policy("push_longest")
def _push_longest(x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Column i pushes the largest other coordinate (smallest index on ties)"""
    n, d = x.shape
    if d == 1:
        return np.zeros((n, 1, 1))
    targets = np.empty((n, d), dtype=int)
    for i in range(d):
        masked = x.copy()
        masked[:, i] = -np.inf
        targets[:, i] = np.argmax(masked, axis=1)
    return column_targets(alpha, targets)


@dataclass(frozen=True, eq=False)
class BoundaryPolicy:
    """
    Push targets on the faces of an orthant grid.

    targets[i] has the grid shape; on nodes with k_i = 0 it holds the row j
    receiving alpha_i when coordinate i is pushed, or -1 for no push. Other
    nodes hold -1.
    """

    d: int
    L: float
    h: float
    alpha: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        n_axis = int(round(self.L / self.h)) + 1
        expected = (self.d,) + (n_axis,) * self.d
        if self.targets.shape != expected:
            raise DimensionError(f"targets must have shape {expected}, got {self.targets.shape}")

    def lookup(self, x: np.ndarray) -> np.ndarray:
        """Targets per column for a batch of states, via the nearest node of each face"""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n_max = self.targets.shape[1] - 1
        k = np.clip(np.rint(x / self.h), 0, n_max).astype(int)
        out = np.empty(x.shape, dtype=int)
        for i in range(self.d):
            ki = k.copy()
            ki[:, i] = 0
            out[:, i] = self.targets[i][tuple(ki.T)]
        return out

    def matrices(self, x: np.ndarray) -> np.ndarray:
        return column_targets(self.alpha, self.lookup(x))


@dataclass(frozen=True, eq=False)
class PolicyDescriptor:
    kind: PolicyKind
    vertex_index: Optional[int] = None
    table: Optional[BoundaryPolicy] = None
    callback: Optional[Union[str, PolicyCallback]] = None
    label: Optional[str] = None

    @classmethod
    def constant_vertex(cls, index: int) -> "PolicyDescriptor":
        return cls(PolicyKind.CONSTANT_VERTEX, vertex_index=int(index), label=f"vertex:{int(index)}")

    @classmethod
    def feedback_argmin(cls, table: BoundaryPolicy, label: str = "feedback:argmin") -> "PolicyDescriptor":
        return cls(PolicyKind.FEEDBACK_ARGMIN, table=table, label=label)

    @classmethod
    def feedback_callback(cls, callback: Union[str, PolicyCallback], label: Optional[str] = None) -> "PolicyDescriptor":
        if label is None:
            label = f"callback:{callback}" if isinstance(callback, str) else f"callback:{getattr(callback, '__name__', 'fn')}"
        return cls(PolicyKind.FEEDBACK_CALLBACK, callback=callback, label=label)

    @property
    def name(self) -> str:
        return self.label or self.kind.value


class Controller:
    """Resolved policy: a constant matrix or a state feedback"""

    def __init__(self, descriptor: PolicyDescriptor, alpha: np.ndarray, constant: Optional[ReflectionMatrix] = None, feedback=None):
        self.descriptor = descriptor
        self.alpha = alpha
        self.constant = constant
        self._feedback = feedback

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def matrices(self, x: np.ndarray) -> np.ndarray:
        """P stack of shape (n, d, d) for states of shape (n, d)"""
        if self.constant is not None:
            return np.broadcast_to(self.constant.p, (x.shape[0],) + self.constant.p.shape)
        return self._feedback(x)


def resolve_policy(policy: PolicyDescriptor, spec) -> Controller:
    """
    Build the controller for a descriptor on a given problem

    Raises:
        PreconditionError: unknown vertex index or callback id
        DimensionError: feedback table built for another dimension
    """
    if policy.kind is PolicyKind.CONSTANT_VERTEX:
        vertices = vertex_matrices(spec)
        if policy.vertex_index is None or not 0 <= policy.vertex_index < len(vertices):
            raise PreconditionError(f"vertex index {policy.vertex_index} outside 0..{len(vertices) - 1}")
        return Controller(policy, spec.alpha, constant=vertices[policy.vertex_index])

    if policy.kind is PolicyKind.FEEDBACK_ARGMIN:
        table = policy.table
        if table is None or table.d != spec.d:
            raise DimensionError("feedback table missing or built for another dimension")
        return Controller(policy, spec.alpha, feedback=table.matrices)

    callback = policy.callback
    if isinstance(callback, str):
        try:
            callback = _POLICY_CALLBACKS[callback]
        except KeyError:
            raise PreconditionError(f"Unknown policy callback '{policy.callback}'") from None
    if callback is None:
        raise PreconditionError("feedback_callback policy without a callback")
    alpha = spec.alpha
    return Controller(policy, alpha, feedback=lambda x: callback(x, alpha))


def vertex_policies(spec) -> list:
    """All constant-vertex descriptors for the instance"""
    return [PolicyDescriptor.constant_vertex(k) for k in range(spec.d ** spec.d)]


def parse_policy(text: str, spec) -> PolicyDescriptor:
    """Parse 'vertex:<k>' or 'callback:<id>' from the command line"""
    kind, _, value = text.partition(":")
    if kind == "vertex" and value.isdigit():
        return PolicyDescriptor.constant_vertex(int(value))
    if kind == "callback" and value:
        return PolicyDescriptor.feedback_callback(value)
    raise PreconditionError(f"Cannot parse policy '{text}' (expected vertex:<k> or callback:<id>)")
