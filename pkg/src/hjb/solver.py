"""
Solver for the discounted HJB equation with nonlinear Neumann conditions on
a truncated orthant.

The default method is Howard policy iteration: fix the push targets on the
faces, solve the linear scheme with a sparse direct solver, recompute the
targets from the new field, and stop once they no longer change. The
"sweep" method runs Gauss-Seidel sweeps of the same scheme instead and
refreshes the targets before every sweep. Both stop at the same discrete
fixed point.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import spsolve, spsolve_triangular

from ..model.errors import InstabilityError, NonConvergenceError, PreconditionError
from ..montecarlo.policy import BoundaryPolicy, PolicyDescriptor
from .grid import OrthantGrid, default_grid
from .stencil import Stencil, build_stencil

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = {"howard": 200, "sweep": 200_000}
GROWTH_PATIENCE = 50
SWEEP_LOG_EVERY = 1000

Method = Literal["howard", "sweep"]


@dataclass(frozen=True, eq=False)
class ValueField:
    """
    Value function samples on an orthant grid.

    Attributes:
        grid: The lattice
        values: V per node, shape grid.shape
        policy: Push targets on the faces from the final field
        interior_residual: Max scheme residual over interior nodes
        boundary_residual: Max over face nodes of |mean of H_i over active faces|
        iterations: Policy iterations or sweeps performed
        method: "howard" or "sweep"
        history: Sup-norm update per iteration
    """

    grid: OrthantGrid
    values: np.ndarray
    policy: BoundaryPolicy
    interior_residual: float
    boundary_residual: float
    iterations: int
    method: str = "howard"
    history: Tuple[float, ...] = field(default=())

    @cached_property
    def _interpolator(self) -> RegularGridInterpolator:
        axes = (self.grid.axis,) * self.grid.d
        return RegularGridInterpolator(axes, self.values, method="linear", bounds_error=False, fill_value=None)

    def interpolate(self, x) -> np.ndarray:
        """Multilinear interpolation; states are clipped into [0, L]^d"""
        points = np.atleast_2d(np.asarray(x, dtype=float))
        return self._interpolator(np.clip(points, 0.0, self.grid.L))

    def __call__(self, x) -> np.ndarray:
        return self.interpolate(x)

    def value_at(self, x) -> float:
        return float(self.interpolate(np.asarray(x, dtype=float)[None, :])[0])

    def to_frame(self) -> pd.DataFrame:
        coords = self.grid.coordinates()
        columns = {f"x_{k + 1}": coords[:, k] for k in range(self.grid.d)}
        columns["value"] = self.values.reshape(-1)
        return pd.DataFrame(columns)

    def metadata(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "interior_residual": self.interior_residual,
            "boundary_residual": self.boundary_residual,
            "iterations": self.iterations,
            "method": self.method,
            "value_at_origin": float(self.values.reshape(-1)[0]),
        }


def _residuals(stencil: Stencil, v: np.ndarray) -> Tuple[float, float]:
    interior = stencil.interior_residual(v)
    H = stencil.face_hamiltonians(v)
    boundary = np.abs(np.nanmean(H, axis=1)) if H.size else np.zeros(0)
    return (
        float(interior.max()) if interior.size else 0.0,
        float(boundary.max()) if boundary.size else 0.0,
    )


def _howard(stencil: Stencil, tol: float, max_iter: int):
    v = np.zeros(stencil.n_nodes)
    targets = stencil.improve(v)
    history = []
    for iteration in range(1, max_iter + 1):
        matrix, rhs = stencil.system(targets)
        v_new = spsolve(matrix.tocsc(), rhs)
        if not np.all(np.isfinite(v_new)):
            raise InstabilityError(f"policy iteration produced non-finite values at iteration {iteration}")
        update = float(np.abs(v_new - v).max())
        history.append(update)
        v = v_new
        new_targets = stencil.improve(v)
        changed = int(np.count_nonzero(new_targets != targets))
        logger.debug(f"[HJB] Howard iteration {iteration}: update {update:.3e}, {changed} targets changed")
        if changed == 0 or update < tol:
            return v, iteration, history
        targets = new_targets
    raise NonConvergenceError(f"policy iteration did not settle in {max_iter} iterations", history)


def _sweep(stencil: Stencil, tol: float, max_iter: int):
    v = np.zeros(stencil.n_nodes)
    targets = None
    lower = upper = rhs = None
    history = []
    growth = 0
    for sweep in range(1, max_iter + 1):
        new_targets = stencil.improve(v)
        if targets is None or np.any(new_targets != targets):
            targets = new_targets
            matrix, rhs = stencil.system(targets)
            lower = sparse.tril(matrix, format="csr")
            upper = sparse.triu(matrix, k=1, format="csr")
        v_new = spsolve_triangular(lower, rhs - upper @ v, lower=True)
        update = float(np.abs(v_new - v).max())
        if not np.isfinite(update):
            raise InstabilityError(f"sweep {sweep} produced non-finite values; try a smaller h or larger beta")
        growth = growth + 1 if history and update > history[-1] else 0
        history.append(update)
        v = v_new
        if growth >= GROWTH_PATIENCE:
            raise InstabilityError(
                f"update norm grew for {GROWTH_PATIENCE} consecutive sweeps (last {update:.3e}); "
                "try a smaller h or a larger beta h^2 / max A"
            )
        if sweep % SWEEP_LOG_EVERY == 0:
            logger.debug(f"[HJB] Sweep {sweep}: update {update:.3e}")
        if update < tol:
            return v, sweep, history
    raise NonConvergenceError(f"sweeps did not reach tol={tol} in {max_iter} sweeps", history)


def solve_hjb(
    spec,
    grid: Optional[OrthantGrid] = None,
    tol: float = DEFAULT_TOL,
    max_sweeps: Optional[int] = None,
    method: Method = "howard",
) -> ValueField:
    """
    Solve the discrete HJB equation

    Args:
        spec: Problem instance; A must be diagonally dominant
        grid: Lattice (default: `default_grid(spec)`)
        tol: Stop once the sup-norm update is below tol
        max_sweeps: Iteration cap (default 200 policy iterations or 200000 sweeps)
        method: "howard" or "sweep"

    Raises:
        SchemeError: non-monotone stencil
        NonConvergenceError: iteration cap reached
        InstabilityError: diverging sweeps or non-finite values
    """
    if tol <= 0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    if method not in DEFAULT_MAX_ITER:
        raise PreconditionError(f"unknown method '{method}' (expected howard or sweep)")
    grid = grid or default_grid(spec)
    max_iter = DEFAULT_MAX_ITER[method] if max_sweeps is None else int(max_sweeps)
    stencil = build_stencil(spec, grid)
    logger.info(f"[HJB] Solving on {grid.n_nodes} nodes (L={grid.L:g}, h={grid.h:g}) by {method}")

    runner = _howard if method == "howard" else _sweep
    v, iterations, history = runner(stencil, tol, max_iter)

    interior, boundary = _residuals(stencil, v)
    policy = BoundaryPolicy(
        d=grid.d,
        L=grid.L,
        h=grid.h,
        alpha=spec.alpha,
        targets=stencil.to_grid_targets(stencil.improve(v)),
    )
    value_field = ValueField(
        grid=grid,
        values=v.reshape(grid.shape),
        policy=policy,
        interior_residual=interior,
        boundary_residual=boundary,
        iterations=iterations,
        method=method,
        history=tuple(history),
    )
    logger.info(
        f"[HJB] Done after {iterations} iterations: V(0)={value_field.values.reshape(-1)[0]:.6g}, "
        f"interior residual {interior:.2e}, boundary residual {boundary:.2e}"
    )
    return value_field


def residuals(value_field: ValueField, spec) -> Tuple[float, float]:
    """Recompute (interior, boundary) residuals of a field on a fresh pass"""
    stencil = build_stencil(spec, value_field.grid)
    return _residuals(stencil, value_field.values.reshape(-1))


def boundary_condition_values(value_field: ValueField, spec) -> np.ndarray:
    """
    Discrete H_i(DV) on every face node

    Returns:
        Array of shape (d,) + grid shape, NaN off face i
    """
    grid = value_field.grid
    stencil = build_stencil(spec, grid)
    H = stencil.face_hamiltonians(value_field.values.reshape(-1))
    full = np.full((grid.d, grid.n_nodes), np.nan)
    full[:, stencil.face] = H.T
    return full.reshape((grid.d,) + grid.shape)


def extract_policy(value_field: ValueField, spec) -> PolicyDescriptor:
    """Feedback policy pushing along the argmin column of the discrete Hamiltonian"""
    stencil = build_stencil(spec, value_field.grid)
    targets = stencil.to_grid_targets(stencil.improve(value_field.values.reshape(-1)))
    table = BoundaryPolicy(d=spec.d, L=value_field.grid.L, h=value_field.grid.h, alpha=spec.alpha, targets=targets)
    return PolicyDescriptor.feedback_argmin(table)
