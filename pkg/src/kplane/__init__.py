"""k-plane transforms on the flat, spherical and hyperbolic model spaces.

The sphere and hyperbolic space are handled in their central charts, where
totally geodesic k-submanifolds become affine k-planes of R^d.  The package
computes the transforms and their L^p -> L^q norms, checks the identities
linking the three geometries, evaluates the sharp constants and extremisers,
and factors Lorentz transformations.
"""

from .errors import KPlaneError
from .geometry import Dims, KPlane, Quadric, bracket, chart_lift, chart_project, plane_bracket
from .quadrature import CONVENTION_ID, Estimate, Quadrature, integrate, integrate_plane_measure
from .lorentz import (
    ChartMap, FactorList, LorentzMap, PureBoost, decompose_lorentz, induced_map, pure_boost,
)
from .transform import (
    det_relation_sides, drury_sides, equivariance_sides, invariance_sides, kplane_transform,
    lp_norm, transfer_sides, transform_lq_norm,
)
from .extremals import h0, h_lambda, lift, ratio, ratio_curve, sharp_constants, unlift
from .stability import deficit_scan, distance_to_family

__version__ = "0.1.0"

__all__ = [
    "KPlaneError", "Dims", "KPlane", "Quadric", "bracket", "chart_lift", "chart_project",
    "plane_bracket", "CONVENTION_ID", "Estimate", "Quadrature", "integrate",
    "integrate_plane_measure", "ChartMap", "FactorList", "LorentzMap", "PureBoost",
    "decompose_lorentz", "induced_map", "pure_boost", "det_relation_sides", "drury_sides",
    "equivariance_sides", "invariance_sides", "kplane_transform", "lp_norm", "transfer_sides",
    "transform_lq_norm", "h0", "h_lambda", "lift", "ratio", "ratio_curve", "sharp_constants",
    "unlift", "deficit_scan", "distance_to_family",
]
