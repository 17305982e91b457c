"""
Comparison test function: the convex body S_delta, projection onto it, the
gauge of its fattening and phi = rho^2, with sign-condition checks
"""

from .body import ConvexBody, build_body, enumerate_xis, max_uniform_gap, member_sdelta
from .gauge import gauge, gauge_gradient, gauge_with_gradient, phi, phi_gradient
from .projection import distance_sdelta, project_sdelta
from .signs import (
    NormalConeGenerators,
    SignReport,
    normal_cone_generators,
    sign_table,
    sign_violations,
    sphere_points,
    structure_violations,
    verify_sign_conditions,
)

__all__ = [
    "ConvexBody",
    "NormalConeGenerators",
    "SignReport",
    "build_body",
    "distance_sdelta",
    "enumerate_xis",
    "gauge",
    "gauge_gradient",
    "gauge_with_gradient",
    "max_uniform_gap",
    "member_sdelta",
    "normal_cone_generators",
    "phi",
    "phi_gradient",
    "project_sdelta",
    "sign_table",
    "sign_violations",
    "sphere_points",
    "structure_violations",
    "verify_sign_conditions",
]
