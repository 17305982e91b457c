"""
Monotone finite-difference stencil for the HJB equation on an orthant grid.

Nodes fall into three classes, checked in this order:

- outer: some k_i = N. Closed by V(x) - 2V(x - h e_i) + V(x - 2h e_i) = 0
  along the first such i.
- face: some k_i = 0. One row sums -h H_i over the active faces, with
  p_i = (V(x + h e_i) - V(x)) / h and tangential p_j backward when k_j >= 1,
  forward when k_j = 0.
- interior: (beta + sum w) V(x) - sum w_nb V(nb) = l(x), with the 7-point
  split of the cross derivatives and upwind drift.

The face rows are linear once a push target j (or -1 for no push) is fixed
for every active face; `Stencil.system` assembles the matrix for such a
policy and `Stencil.improve` picks the targets from a field.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import sparse

from ..model.errors import DimensionError, SchemeError
from ..model.hamiltonian import hamiltonian_values
from .grid import OrthantGrid

logger = logging.getLogger(__name__)

DOMINANCE_TOL = 1e-12


def _triplets(rows, cols, vals):
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def check_dominance(A: np.ndarray) -> np.ndarray:
    """
    Net weight 1/2 A_ii - 1/2 sum_{j != i} |A_ij| of the axis neighbours (times h^2)

    Raises:
        SchemeError: some net weight is negative
    """
    off = np.abs(A).sum(axis=1) - np.abs(np.diag(A))
    net = 0.5 * np.diag(A) - 0.5 * off
    bad = np.flatnonzero(net < -DOMINANCE_TOL)
    if bad.size:
        i = int(bad[0])
        entries = ", ".join(f"A[{i}][{j}]={A[i, j]:.4g}" for j in range(A.shape[0]) if j != i)
        raise SchemeError(
            f"stencil not monotone: A[{i}][{i}]={A[i, i]:.4g} below sum of |{entries}|; "
            "the scheme needs sum_j |A_ij| <= A_ii"
        )
    return np.maximum(net, 0.0)


@dataclass(frozen=True, eq=False)
class Stencil:
    grid: OrthantGrid
    alpha: np.ndarray
    boundary_cost: np.ndarray
    interior: np.ndarray
    face: np.ndarray
    outer: np.ndarray
    on_face: np.ndarray
    base: sparse.csr_matrix
    rhs: np.ndarray
    running_cost: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.grid.n_nodes

    def tangential_gradient(self, v: np.ndarray) -> np.ndarray:
        """Discrete gradient at face nodes: forward along k_j = 0, backward otherwise"""
        nodes = self.face
        k = self.grid.multi_index[nodes]
        h = self.grid.h
        grad = np.empty((nodes.size, self.grid.d))
        for j, stride in enumerate(self.grid.strides):
            forward = (v[nodes + stride] - v[nodes]) / h
            backward = (v[nodes] - v[np.maximum(nodes - stride, 0)]) / h
            grad[:, j] = np.where(k[:, j] == 0, forward, backward)
        return grad

    def face_hamiltonians(self, v: np.ndarray) -> np.ndarray:
        """H_i at every face node, NaN where k_i > 0; shape (n_face, d)"""
        q = self.tangential_gradient(v) + self.boundary_cost
        H = hamiltonian_values(self.alpha, q)
        return np.where(self.on_face, H, np.nan)

    def improve(self, v: np.ndarray) -> np.ndarray:
        """
        Push targets maximizing -h H_i at the current field

        Returns:
            int array (n_face, d); -1 for no push or for faces not active
        """
        q = self.tangential_gradient(v) + self.boundary_cost
        targets = np.full(q.shape, -1, dtype=int)
        rows = np.arange(q.shape[0])
        for i in range(self.grid.d):
            masked = q.copy()
            masked[:, i] = -np.inf
            j = np.argmax(masked, axis=1)
            push = self.on_face[:, i] & (masked[rows, j] > 0.0)
            targets[:, i] = np.where(push, j, -1)
        return targets

    def system(self, targets: np.ndarray) -> Tuple[sparse.csr_matrix, np.ndarray]:
        """Linear system of the scheme under fixed push targets"""
        if targets.shape != self.on_face.shape:
            raise DimensionError(f"targets must have shape {self.on_face.shape}, got {targets.shape}")
        nodes = self.face
        k = self.grid.multi_index[nodes]
        rows, cols, vals = [], [], []
        rhs = self.rhs.copy()
        for i in range(self.grid.d):
            j = targets[:, i]
            push = j >= 0
            if not push.any():
                continue
            node = nodes[push]
            tj = j[push]
            a = self.alpha[i]
            stride = self.grid.strides[tj]
            backward = k[push, tj] >= 1
            # h p_j = V - V(-e_j) when backward, V(+e_j) - V when forward
            sign = np.where(backward, 1.0, -1.0)
            neighbour = np.where(backward, node - stride, node + stride)
            rows += [node, node]
            cols += [node, neighbour]
            vals += [a * sign, -a * sign]
            rhs[node] -= self.grid.h * a * self.boundary_cost[tj]
        if not rows:
            return self.base, rhs
        r, c, v = _triplets(rows, cols, vals)
        policy_part = sparse.coo_matrix((v, (r, c)), shape=self.base.shape)
        return (self.base + policy_part).tocsr(), rhs

    def interior_residual(self, v: np.ndarray) -> np.ndarray:
        r = self.base[self.interior] @ v - self.rhs[self.interior]
        return np.abs(r)

    def to_grid_targets(self, targets: np.ndarray) -> np.ndarray:
        """Face targets scattered onto the lattice, shape (d,) + grid shape"""
        full = np.full((self.grid.d, self.grid.n_nodes), -1, dtype=int)
        full[:, self.face] = targets.T
        return full.reshape((self.grid.d,) + self.grid.shape)


def classify_nodes(grid: OrthantGrid):
    """(interior, face, outer) flat indices; outer takes precedence over face"""
    k = grid.multi_index
    outer_mask = np.any(k == grid.cells, axis=1)
    face_mask = ~outer_mask & np.any(k == 0, axis=1)
    interior_mask = ~outer_mask & ~face_mask
    return np.flatnonzero(interior_mask), np.flatnonzero(face_mask), np.flatnonzero(outer_mask)


def build_stencil(spec, grid: OrthantGrid) -> Stencil:
    """
    Assemble the policy-independent part of the scheme

    Face gradients are one-sided (forward where k_j = 0, backward otherwise)
    so every face row stays monotone.

    Raises:
        DimensionError: grid and problem dimensions differ
        SchemeError: A = sigma sigma^T is not diagonally dominant
    """
    if grid.d != spec.d:
        raise DimensionError(f"grid dimension {grid.d} does not match d={spec.d}")
    d, h = grid.d, grid.h
    A = spec.covariance
    axis_net = check_dominance(A) / h**2
    strides = grid.strides
    interior, face, outer = classify_nodes(grid)
    x = grid.coordinates()
    running = np.asarray(spec.cost_at(x), dtype=float).reshape(-1)
    rhs = np.zeros(grid.n_nodes)
    rows, cols, vals = [], [], []

    # interior
    b = spec.drift_at(x[interior])
    diag = np.full(interior.size, spec.beta)
    for i in range(d):
        for sign, upwind in ((1, np.maximum(b[:, i], 0.0)), (-1, np.maximum(-b[:, i], 0.0))):
            w = axis_net[i] + upwind / h
            rows.append(interior)
            cols.append(interior + sign * strides[i])
            vals.append(-w)
            diag = diag + w
        for j in range(i + 1, d):
            a_ij = A[i, j]
            if a_ij == 0.0:
                continue
            w = abs(a_ij) / (2.0 * h**2)
            pairs = ((1, 1), (-1, -1)) if a_ij > 0 else ((1, -1), (-1, 1))
            for si, sj in pairs:
                rows.append(interior)
                cols.append(interior + si * strides[i] + sj * strides[j])
                vals.append(np.full(interior.size, -w))
                diag = diag + w
    rows.append(interior)
    cols.append(interior)
    vals.append(diag)
    rhs[interior] = running[interior]
    logger.debug(f"[HJB] Interior stencil weights >= {float(axis_net.min()):.4g}, diagonal <= {float(diag.max()) if diag.size else 0.0:.4g}")

    # faces: sum over active i of V - V(+e_i) - h c_i
    k_face = grid.multi_index[face]
    on_face = k_face == 0
    active = on_face.sum(axis=1).astype(float)
    rows.append(face)
    cols.append(face)
    vals.append(active)
    for i in range(d):
        node = face[on_face[:, i]]
        rows.append(node)
        cols.append(node + strides[i])
        vals.append(-np.ones(node.size))
    rhs[face] = h * (on_face * spec.boundary_cost).sum(axis=1)

    # outer: linear extrapolation along the first saturated axis
    k_outer = grid.multi_index[outer]
    first = np.argmax(k_outer == grid.cells, axis=1)
    step = strides[first]
    rows += [outer, outer, outer]
    cols += [outer, outer - step, outer - 2 * step]
    vals += [np.ones(outer.size), np.full(outer.size, -2.0), np.ones(outer.size)]

    r, c, v = _triplets(rows, cols, vals)
    base = sparse.coo_matrix((v, (r, c)), shape=(grid.n_nodes, grid.n_nodes)).tocsr()
    logger.debug(f"[HJB] Stencil: {interior.size} interior, {face.size} face, {outer.size} outer nodes")
    return Stencil(
        grid=grid,
        alpha=spec.alpha,
        boundary_cost=spec.boundary_cost,
        interior=interior,
        face=face,
        outer=outer,
        on_face=on_face,
        base=base,
        rhs=rhs,
        running_cost=running,
    )
