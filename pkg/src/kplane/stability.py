"""Distance to the extremiser families and deficit-versus-distance scans.

The curved families are lifts of the flat one (``E_+- = P_+- E_0`` in chart
form), so every distance is computed between flat functions: on R^d for the
sphere (times ``2^{1/p}`` for the two hemispheres) and on the unit ball for
the hyperbolic space.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import minimize

from . import kernels, records
from .errors import RegimeError
from .extremals import _dims, h0, lift, ratio, sharp_constant
from .functions import Gaussian, Product, Sum, Truncated, Unlifted, is_numerically_radial
from .geometry import parse_nu
from .quadrature import (
    CONVENTION_ID, Quadrature, graded_rule, sphere_rule, unit_ball_rule, whole_space_rule,
)
from .transform import HYPERBOLIC_MARGIN, lp_norm

MULTI_STARTS = 8
MAX_ITER = 2000
DISTANCE_THRESHOLD = 0.02


@dataclass(frozen=True)
class FamilyDistance:
    distance: float
    best_params: tuple
    iterations: int
    converged: bool


def _pack(C, L, x0):
    return np.concatenate([[C], np.ravel(L), np.ravel(x0)])


def _unpack(theta, d):
    return float(theta[0]), np.asarray(theta[1:1 + d * d]).reshape(d, d), np.asarray(theta[1 + d * d:])


class _FlatProblem:
    """``int w |u - C(1 + |L x + x0|^2)^{-(k+1)/2}|^p`` on fixed nodes."""

    def __init__(self, u, d, k, p, x, w, scale=1.0):
        self.d, self.k, self.p = d, k, float(p)
        self.x = np.ascontiguousarray(x)
        self.w = w
        self.ux = u(self.x)
        self.scale = scale  # distance = scale * (objective)^{1/p}
        self.power = (k + 1) / 2.0

    def family(self, theta):
        C, L, x0 = _unpack(theta, self.d)
        return kernels.extremal_values(self.x, np.ascontiguousarray(L), np.ascontiguousarray(x0), C, self.power)

    def objective(self, theta):
        return float(self.w @ np.abs(self.ux - self.family(theta)) ** self.p)

    def distance(self, theta):
        return self.scale * self.objective(theta) ** (1.0 / self.p)

    def initial_guess(self):
        """Exact for family members: ``u^{-2/(k+1)}`` is a quadratic polynomial."""
        d = self.d
        u = self.ux
        top = float(np.max(u)) if u.size else 0.0
        fallback = _pack(max(top, 1e-12), np.eye(d), np.zeros(d))
        if top <= 0:
            return fallback
        sel = u > 0.05 * top
        if np.count_nonzero(sel) < (d + 1) * (d + 2):
            return fallback
        xs = self.x[sel]
        g = u[sel] ** (-1.0 / self.power)
        iu = np.triu_indices(d)
        quad_terms = xs[:, iu[0]] * xs[:, iu[1]]
        design = np.concatenate([np.ones((len(xs), 1)), xs, quad_terms], axis=1)
        coef, *_ = np.linalg.lstsq(design, g, rcond=None)
        alpha, beta = coef[0], coef[1:1 + d]
        Q = np.zeros((d, d))
        Q[iu] = coef[1 + d:]
        # an off-diagonal coefficient multiplies 2 x_i x_j in x^T Q x
        Q = 0.5 * (Q + Q.T)
        try:
            c = -0.5 * np.linalg.solve(Q, beta)
            s = float(alpha - c @ Q @ c)
            if s <= 0:
                return fallback
            L = np.linalg.cholesky(Q / s).T
        except np.linalg.LinAlgError:
            return fallback
        C = s ** (-self.power)
        return _pack(C, L, -L @ c)


def _split_ball_rule(u, d, quad):
    """Unit-ball rule with a radial break at the outer edge of u's support.

    Family members do not vanish on the annulus outside the support, so the
    edge is a jump of the integrand and must sit on a panel boundary.
    """
    x, w = unit_ball_rule(d, quad.order, quad.levels, quad.grading)
    if u.support is None:
        return x, w
    R = float(u.support.max_norm())
    if not 0.0 < R < 1.0:
        return x, w
    t, wt = graded_rule(quad.order, quad.levels, quad.grading)
    v, wv = sphere_rule(d, quad.order)
    r = R + (1.0 - R) * t
    outer = (r[:, None, None] * v[None, :, :]).reshape(-1, d)
    w_outer = np.outer((1.0 - R) * wt * r ** (d - 1), wv).ravel()
    return np.concatenate([R * x, outer]), np.concatenate([R ** d * w, w_outer])


def _flat_problem(f, nu, dims, quad):
    d, k, p = dims.d, dims.k, dims.p
    nu = parse_nu(nu)
    if nu == "-":
        u = Unlifted(f, "-", k)
        return _FlatProblem(u, d, k, p, *_split_ball_rule(u, d, quad))
    u = f if nu == "0" else Unlifted(f, "+", k)
    if u.support is not None:
        c, r = u.support.bounding_ball()
        M = r * np.eye(d)
    else:
        c, M = u.shape_hint()
    y, wy = whole_space_rule(d, quad.order, quad.levels, quad.grading)
    x = c + y @ M.T
    w = wy * abs(np.linalg.det(M))
    scale = 2.0 ** (1.0 / float(p)) if nu == "+" else 1.0
    return _FlatProblem(u, d, k, p, x, w, scale)


def distance_to_family(f, nu, dims, quad=None, seed=0, starts=MULTI_STARTS, maxiter=MAX_ITER):
    """L^p distance from f to the extremiser family E_nu by multi-start Nelder-Mead.

    The reported distance is the best value found (an upper bound for the
    true distance); ``best_params`` re-evaluate to it exactly on the same nodes.
    """
    dims = _dims(dims)
    quad = quad or Quadrature()
    prob = _flat_problem(f, nu, dims, quad)
    d = dims.d
    zero = _pack(0.0, np.eye(d), np.zeros(d))
    if not np.any(prob.ux):
        return FamilyDistance(0.0, _unpack(zero, d), 0, True)
    rng = np.random.default_rng([seed, 7])
    guess = prob.initial_guess()
    candidates = [guess]
    for _ in range(starts - 1):
        C, L, x0 = _unpack(guess, d)
        candidates.append(_pack(C * math.exp(0.2 * rng.standard_normal()),
                                L @ (np.eye(d) + 0.2 * rng.standard_normal((d, d))),
                                x0 + 0.2 * rng.standard_normal(d)))
    f0 = prob.objective(zero)
    g0 = prob.objective(guess)
    if g0 <= 1e-24 * f0:
        # the quadratic fit already reproduces a family member
        return FamilyDistance(prob.distance(guess), _unpack(guess, d), 0, True)
    best_theta, best_val, iters, converged = zero, f0, 0, True
    opts = {"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-16 * max(f0, 1e-300), "adaptive": True}
    for theta in candidates:
        res = minimize(prob.objective, theta, method="Nelder-Mead", options=opts)
        iters += int(res.nit)
        if res.fun < best_val:
            best_theta, best_val, converged = res.x, float(res.fun), bool(res.success)
    if best_val < f0:
        # restart from the best point with a fresh simplex
        res = minimize(prob.objective, best_theta, method="Nelder-Mead", options=opts)
        iters += int(res.nit)
        if res.fun <= best_val:
            best_theta, best_val = res.x, float(res.fun)
            converged = converged or bool(res.success)
    return FamilyDistance(prob.distance(best_theta), _unpack(best_theta, d), iters, converged)


def family_distance_check(f, nu, dims, quad, fd):
    """Re-evaluate ``|f - g_{best_params}|_p`` on the nodes used by :func:`distance_to_family`."""
    prob = _flat_problem(f, nu, _dims(dims), quad or Quadrature())
    C, L, x0 = fd.best_params
    return prob.distance(_pack(C, L, x0))


# ---------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class StabilityRecord:
    member_id: str
    deficit: float
    distance: float
    norm: float
    ratio_err: float


@dataclass(frozen=True)
class StabilityFit:
    records: list
    fitted_c: float
    regime: str
    nu: str = "0"
    threshold: float = DISTANCE_THRESHOLD

    @property
    def eligible(self):
        return [r for r in self.records if r.distance / r.norm >= self.threshold]

    def pairs(self):
        return [(r.deficit, r.distance) for r in self.records]


def check_regime(members, dims, regime):
    if regime == "hyperplane":
        if dims.k != dims.d - 1:
            raise RegimeError(f"hyperplane regime needs k = d-1 (got d={dims.d}, k={dims.k})")
        return
    if regime == "radial":
        for i, f in enumerate(members):
            if not is_numerically_radial(f):
                raise RegimeError(f"member {i} is not invariant under rotations")
        return
    raise RegimeError(f"unknown regime {regime!r}")


def deficit_scan(members, nu, dims, quad=None, regime="radial", seed=0, A=None,
                 threshold=DISTANCE_THRESHOLD, ids=None):
    """Deficit ``1 - ratio/A_nu`` and family distance for each member, and the fitted c.

    ``fitted_c = min deficit |f|_p^2 / d(f, E)^2`` over members with
    ``d(f, E) / |f|_p >= threshold``.
    """
    dims = _dims(dims)
    nu = parse_nu(nu)
    quad = quad or Quadrature()
    members = list(members)
    check_regime(members, dims, regime)
    if A is None:
        A = sharp_constant(nu, dims, quad)[0]
    ids = ids or [f"m{i:03d}" for i in range(len(members))]
    recs = []
    for mid, f in zip(ids, members):
        r = ratio(f, nu, dims, quad)
        dist = distance_to_family(f, nu, dims, quad, seed=seed).distance
        norm = lp_norm(f, nu, dims.p, quad).value
        recs.append(StabilityRecord(mid, 1.0 - r.ratio / A, dist, norm, r.ratio_err / A))
    fit = [r.deficit * r.norm ** 2 / r.distance ** 2 for r in recs if r.distance / r.norm >= threshold]
    fitted = min(fit) if fit else math.nan
    return StabilityFit(recs, fitted, regime, nu, threshold)


STABILITY_COLUMNS = ["member_id", "deficit", "distance", "norm", "ratio_err"]


def write_scan(csv_path, json_path, fit, config=None):
    rows = [[r.member_id, r.deficit, r.distance, r.norm, r.ratio_err] for r in fit.records]
    records.write_csv(csv_path, STABILITY_COLUMNS, rows, config)
    summary = {"fitted_c": fit.fitted_c, "regime": fit.regime, "nu": fit.nu,
               "threshold": fit.threshold, "convention_id": CONVENTION_ID,
               "eligible": len(fit.eligible)}
    records.write_json(json_path, summary, config)


# ---------------------------------------------------------------------------
# perturbation families

DEFAULT_EPS = (0.05, 0.1, 0.15, 0.2, 0.3, 0.4)


def radial_family(nu, dims, eps=DEFAULT_EPS, width=0.5, delta=HYPERBOLIC_MARGIN):
    """``h0 (1 + eps G)`` with a centred Gaussian G; truncated and lifted for the hyperbolic space."""
    dims = _dims(dims)
    nu = parse_nu(nu)
    d, k = dims.d, dims.k
    h = h0(d, k)
    out = []
    for e in eps:
        f = Sum(h, float(e) * Product(h, Gaussian(np.zeros(d), width)))
        if nu == "-":
            f = lift(Truncated(f, 1.0 - delta), "-", k)
        elif nu == "+":
            f = lift(f, "+", k)
        out.append(f)
    return out


def offcenter_family(dims, eps=DEFAULT_EPS, center=None, width=0.5):
    """``h0 + eps G`` with an off-centre Gaussian (not radial)."""
    dims = _dims(dims)
    d, k = dims.d, dims.k
    c = np.full(d, 0.4) if center is None else np.asarray(center, dtype=float)
    h = h0(d, k)
    return [Sum(h, Gaussian(c, width, float(e))) for e in eps]
