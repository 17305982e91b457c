"""
Exception hierarchy shared by every orthant-hjb package.

Shape and input problems derive from ValueError, numerical failures from
RuntimeError, so callers can catch either the specific class or the builtin.
"""

from typing import Sequence


class OrthantError(Exception):
    """Base class for all toolkit errors"""


class DimensionError(OrthantError, ValueError):
    """Array shapes or grids do not fit together"""


class ConstraintViolationError(OrthantError, ValueError):
    """A model constraint (reflection budget, threshold spacing, rates) is broken"""


class PreconditionError(OrthantError, ValueError):
    """An operation was called outside its documented domain"""


class NotOnBoundaryError(PreconditionError):
    """Normal-cone query at a point with no active constraint"""


class NumericalError(OrthantError, RuntimeError):
    """Base class for failures of an iterative numerical method"""


class NonConvergenceError(NumericalError):
    """Iteration budget exhausted before the tolerance was met"""

    def __init__(self, message: str, distances: Sequence[float] = ()):
        super().__init__(message)
        self.distances = list(distances)


class InstabilityError(NumericalError):
    """Update norms kept growing; the discretization is unstable"""


class SchemeError(NumericalError):
    """The finite-difference stencil is not monotone"""


class IterationCapError(NumericalError):
    """Inner iteration (projection, root bracketing) hit its cap"""


class EventBudgetError(NumericalError):
    """Event-driven simulation exceeded its event guard"""
