"""
Normal cones of S_delta and the sign conditions of the test function.

With h = 0, H_i(D phi(x)) must be >= 0 when x_i >= 0 and <= 0 when x_i <= 0.
The sign conditions rest on the face structure of S_delta near the
coordinate hyperplanes: at a boundary point with |x_i| < delta every active
xi has xi_i = alpha_i and the active xis share a coordinate equal to one.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..model.errors import DimensionError, NotOnBoundaryError, PreconditionError
from ..model.hamiltonian import hamiltonian_values
from .body import ConvexBody
from .gauge import phi, phi_gradient

logger = logging.getLogger(__name__)

SPHERE_RADII = (0.5, 1.0, 2.0, 5.0)
ACTIVE_TOL = 1e-9
FACE_MARGIN = 1e-3
MAX_DRAW_FACTOR = 50


@dataclass(frozen=True, eq=False)
class NormalConeGenerators:
    minus_axes: Tuple[int, ...]
    active_xis: np.ndarray
    active_indices: Tuple[int, ...] = field(default=())

    @property
    def is_empty(self) -> bool:
        return not self.minus_axes and self.active_xis.shape[0] == 0


def normal_cone_generators(z, body: ConvexBody, tol: float = ACTIVE_TOL) -> NormalConeGenerators:
    """
    Active constraints of S_delta at z

    Returns:
        J_z = {i : |z_i + delta| <= tol} and the xis with |xi.z - theta| <= tol

    Raises:
        NotOnBoundaryError: no constraint is active at z
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (body.d,):
        raise DimensionError(f"point must have shape ({body.d},), got {z.shape}")
    if tol <= 0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    minus_axes = tuple(int(i) for i in np.flatnonzero(np.abs(z + body.delta) <= tol))
    active = np.flatnonzero(np.abs(body.xis @ z - body.xi_thresholds) <= tol)
    if not minus_axes and active.size == 0:
        raise NotOnBoundaryError(f"no constraint of S_delta is active at {z.tolist()} (tol={tol})")
    return NormalConeGenerators(
        minus_axes=minus_axes,
        active_xis=body.xis[active],
        active_indices=tuple(int(k) for k in active),
    )


def _ray_to_boundary(directions: np.ndarray, body: ConvexBody) -> np.ndarray:
    """Points t u on the boundary of S_delta along rays from the origin"""
    A, b = body.halfspaces()
    slopes = directions @ A.T
    with np.errstate(divide="ignore"):
        reach = np.where(slopes > 0, b / np.where(slopes > 0, slopes, 1.0), np.inf)
    return reach.min(axis=1)[:, None] * directions


def _face_samples(body: ConvexBody, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Boundary points of S_delta with one coordinate inside (-delta, delta)

    Returns:
        (points (k, d), face index per point), k <= n
    """
    d = body.d
    limit = body.delta * (1.0 - FACE_MARGIN)
    points: List[np.ndarray] = []
    faces: List[np.ndarray] = []
    collected = 0
    for _ in range(MAX_DRAW_FACTOR):
        faces_draw = rng.integers(0, d, size=n)
        u = rng.standard_normal((n, d))
        rows = np.arange(n)
        u[rows, faces_draw] = 0.0
        rest = np.linalg.norm(u, axis=1)
        u[rows, faces_draw] = rng.uniform(-1.0, 1.0, size=n) * body.delta / body.outer_radius * rest
        keep = np.linalg.norm(u, axis=1) > 0
        x = _ray_to_boundary(u[keep], body)
        near = np.abs(x[np.arange(x.shape[0]), faces_draw[keep]]) <= limit
        points.append(x[near])
        faces.append(faces_draw[keep][near])
        collected += int(near.sum())
        if collected >= n:
            break
    return np.concatenate(points)[:n], np.concatenate(faces)[:n]


def _structure_failures(body: ConvexBody, points: np.ndarray, faces: np.ndarray, tol: float) -> np.ndarray:
    """Boolean mask of sampled points whose active xis break the face structure"""
    alpha = body.alpha
    ones = body.xis == 1.0
    failed = np.zeros(points.shape[0], dtype=bool)
    for k, (x, i) in enumerate(zip(points, faces)):
        active = np.flatnonzero(np.abs(body.xis @ x - body.xi_thresholds) <= tol)
        if active.size == 0:
            continue
        wrong_entry = np.any(body.xis[active, i] != alpha[i])
        shared_one = np.logical_and.reduce(ones[active], axis=0).any()
        failed[k] = wrong_entry or not shared_one
    return failed


def structure_violations(body: ConvexBody, n: int, seed: int = 0, tol: float = ACTIVE_TOL) -> int:
    """
    Count sampled boundary points with |x_i| <= delta (1 - 1e-3) where an
    active xi has xi_i != alpha_i, or where the active xis share no
    coordinate equal to one
    """
    if body.d == 1:
        return 0
    rng = np.random.default_rng(seed)
    points, faces = _face_samples(body, n, rng)
    failures = _structure_failures(body, points, faces, tol)
    if failures.any():
        logger.debug(f"[TESTFN] Face structure broken at {points[failures][0].tolist()}")
    return int(failures.sum())


@dataclass
class SignReport:
    n_points: int
    tol: float
    max_violation_nonneg: float
    max_violation_nonpos: float
    worst_point: Optional[List[float]]
    structure_checked: int
    structure_failures: int

    @property
    def passed(self) -> bool:
        return (
            self.max_violation_nonneg <= self.tol
            and self.max_violation_nonpos <= self.tol
            and self.structure_failures == 0
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def sphere_points(d: int, n: int, seed: int, radii=SPHERE_RADII) -> np.ndarray:
    """n uniform directions, radii cycling through the given list"""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return np.resize(np.asarray(radii, dtype=float), n)[:, None] * u


def sign_violations(body: ConvexBody, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-point violations of the two sign conditions

    Returns:
        (nonneg, nonpos): max over i with x_i >= 0 of (-H_i)^+ and max over
        i with x_i <= 0 of (H_i)^+
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    H = hamiltonian_values(body.alpha, phi_gradient(x, body))
    nonneg = np.where(x >= 0, np.maximum(-H, 0.0), 0.0).max(axis=1)
    nonpos = np.where(x <= 0, np.maximum(H, 0.0), 0.0).max(axis=1)
    return nonneg, nonpos


def verify_sign_conditions(body: ConvexBody, n_samples: int, seed: int = 0, tol: float = 1e-6) -> SignReport:
    """
    Check the sign conditions of H_i(D phi) on spheres of radii 0.5, 1, 2, 5
    (n_samples points on each sphere), plus the face structure of S_delta on
    n_samples boundary points. Violations are reported, never raised.
    """
    if n_samples < 1:
        raise PreconditionError(f"n_samples must be >= 1, got {n_samples}")
    x = sphere_points(body.d, n_samples * len(SPHERE_RADII), seed)
    nonneg, nonpos = sign_violations(body, x)
    worst = int(np.argmax(np.maximum(nonneg, nonpos)))

    checked = failures = 0
    if body.d > 1:
        rng = np.random.default_rng(seed + 1)
        points, faces = _face_samples(body, n_samples, rng)
        checked = points.shape[0]
        failures = int(_structure_failures(body, points, faces, ACTIVE_TOL).sum())

    report = SignReport(
        n_points=int(x.shape[0]),
        tol=tol,
        max_violation_nonneg=float(nonneg.max()),
        max_violation_nonpos=float(nonpos.max()),
        worst_point=x[worst].tolist(),
        structure_checked=checked,
        structure_failures=failures,
    )
    level = logging.INFO if report.passed else logging.WARNING
    logger.log(
        level,
        f"[TESTFN] Sign check on {report.n_points} points: nonneg {report.max_violation_nonneg:.2e}, "
        f"nonpos {report.max_violation_nonpos:.2e}, structure {failures}/{checked}",
    )
    return report


def sign_table(body: ConvexBody, x) -> pd.DataFrame:
    """Columns x_k, phi, dphi_k and H_k for plotting; k is 1-based"""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    grad = phi_gradient(x, body)
    H = hamiltonian_values(body.alpha, grad)
    columns = {f"x_{k + 1}": x[:, k] for k in range(body.d)}
    columns["phi"] = np.atleast_1d(phi(x, body))
    columns.update({f"dphi_{k + 1}": grad[:, k] for k in range(body.d)})
    columns.update({f"H_{k + 1}": H[:, k] for k in range(body.d)})
    return pd.DataFrame(columns)
