"""Extremiser families, lifts, sharp constants and ratio experiments."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import SupportError, ZeroDenominatorError
from .functions import (
    Constant, Extremal, Lifted, ManifoldExtremal, Truncated, Unlifted, extremal_eval,
)
from .geometry import Dims, parse_nu
from .quadrature import CONVENTION_ID, Estimate, Quadrature
from .transform import HYPERBOLIC_MARGIN, _require_ball_support, lp_norm, transform_lq_norm
from . import records

__all__ = [
    "extremal_eval", "h0", "h_lambda", "lift", "unlift", "SharpConstants", "sharp_constant",
    "sharp_constants", "closed_form_constants", "RatioReport", "ratio", "ratio_curve",
    "write_ratio_curve",
]


def h0(d, k):
    """``(1 + |x|^2)^{-(k+1)/2}``."""
    return Extremal.h0(d, k)


def h_lambda(lam, d, k):
    """``lam^{d/p} h0(lam x)``: same L^p norm as h0, concentrating at the origin as lam grows."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    p = Dims(d, k).p
    return Extremal(float(lam) ** (d / float(p)), float(lam) * np.eye(d), np.zeros(d), k)


def lift(f, sign, k):
    """Chart form of ``P_+- f``; the hyperbolic lift needs support inside the unit ball."""
    sign = parse_nu(sign)
    if sign == "-":
        _require_ball_support(f)
    return Lifted(f, sign, k)


def unlift(g, sign, k):
    """Inverse lift ``P_+-^{-1}``."""
    sign = parse_nu(sign)
    if sign == "-":
        _require_ball_support(g)
    return Unlifted(g, sign, k)


def closed_form_constants(d, k):
    """Closed forms under the frozen convention, known only for lines in the plane."""
    if (d, k) != (2, 1):
        return None
    A0 = 2 ** (-1 / 3) * math.pi ** (2 / 3)
    return {"A0": A0, "Aplus": math.pi ** (2 / 3), "Aminus": A0}


@dataclass(frozen=True)
class SharpConstants:
    A0: float
    Aplus: float
    Aminus: float
    convention_id: str = CONVENTION_ID
    non_attained: bool = True
    errors: dict = field(default_factory=dict, compare=False)

    def value(self, nu):
        return {"0": self.A0, "+": self.Aplus, "-": self.Aminus}[parse_nu(nu)]


def _dims(dims, d=None, k=None):
    if isinstance(dims, Dims):
        return dims
    if isinstance(dims, tuple):
        return Dims(*dims)
    return Dims(d, k)


def sharp_constant(nu, dims, quad=None):
    """``(value, stderr, non_attained)`` for one curvature tag.

    ``A_0 = |R_0 h0|_q / |h0|_p`` and ``A_+ = |R_+ 1|_q / |1|_p``; ``A_-``
    equals ``A_0`` and is flagged as not attained.
    """
    dims = _dims(dims)
    nu = parse_nu(nu)
    quad = quad or Quadrature()
    d, k = dims.d, dims.k
    if nu == "+":
        f, space = Constant(d, 1.0), "+"
    else:
        f, space = h0(d, k), "0"
    r = ratio(f, space, dims, quad)
    return r.ratio, r.ratio_err, nu == "-"


def sharp_constants(dims, quad=None):
    dims = _dims(dims)
    a0, e0, _ = sharp_constant("0", dims, quad)
    ap, ep, _ = sharp_constant("+", dims, quad)
    return SharpConstants(a0, ap, a0, CONVENTION_ID, True, {"A0": e0, "Aplus": ep, "Aminus": e0})


@dataclass(frozen=True)
class RatioReport:
    numerator: Estimate
    denominator: Estimate
    ratio: float
    ratio_err: float

    def below(self, bound, sigmas=3.0):
        return self.ratio <= bound + sigmas * self.ratio_err


def ratio(f, nu, dims, quad=None):
    """``|R_nu f|_q / |f|_p`` with first-order error propagation."""
    dims = _dims(dims)
    nu = parse_nu(nu)
    quad = quad or Quadrature()
    den = lp_norm(f, nu, dims.p, quad)
    if den.value == 0.0:
        raise ZeroDenominatorError("ratio of a function with zero L^p norm")
    num = transform_lq_norm(f, dims.k, nu, dims.q, quad)
    r = num.value / den.value
    err = abs(r) * (num.stderr / abs(num.value) if num.value else 0.0) + abs(r) * den.stderr / den.value
    return RatioReport(num, den, r, err)


def truncated_lift(lam, dims, delta=HYPERBOLIC_MARGIN):
    """``P_-(1_{B(1-delta)} h_lambda)`` in chart form."""
    dims = _dims(dims)
    f = Truncated(h_lambda(lam, dims.d, dims.k), 1.0 - delta)
    return lift(f, "-", dims.k)


@dataclass(frozen=True)
class CurvePoint:
    lam: float
    ratio: float
    ratio_err: float
    gap: float


def ratio_curve(lambdas, dims, quad=None, delta=HYPERBOLIC_MARGIN, A0=None):
    """Hyperbolic ratios of lifted truncated ``h_lambda`` and their gaps to A_0."""
    dims = _dims(dims)
    lambdas = [float(x) for x in lambdas]
    if any(x <= 0 for x in lambdas):
        raise ValueError("lambda values must be positive")
    if lambdas != sorted(lambdas):
        raise ValueError("lambda values must be ascending")
    quad = quad or Quadrature()
    if A0 is None:
        A0 = sharp_constant("0", dims, quad)[0]
    out = []
    for lam in lambdas:
        r = ratio(truncated_lift(lam, dims, delta), "-", dims, quad)
        out.append(CurvePoint(lam, r.ratio, r.ratio_err, A0 - r.ratio))
    return out


RATIO_CURVE_COLUMNS = ["lambda", "ratio", "ratio_err", "gap", "convention_id"]


def write_ratio_curve(path, curve, config=None):
    rows = [[c.lam, c.ratio, c.ratio_err, c.gap, CONVENTION_ID] for c in curve]
    return records.write_csv(path, RATIO_CURVE_COLUMNS, rows, config)


def random_family_member(nu, d, k, rng, spread=0.3, shift=0.5):
    """Random member of E_0 or E_+ with a well-conditioned L."""
    nu = parse_nu(nu)
    L = np.eye(d) + spread * rng.standard_normal((d, d))
    while abs(np.linalg.det(L)) < 0.2:
        L = np.eye(d) + spread * rng.standard_normal((d, d))
    C = float(rng.uniform(0.5, 2.0))
    x0 = shift * rng.standard_normal(d)
    if nu == "0":
        return Extremal(C, L, x0, k)
    if nu == "+":
        return ManifoldExtremal("+", C, L, x0, k)
    raise SupportError("the hyperbolic family has no ball-supported members")
