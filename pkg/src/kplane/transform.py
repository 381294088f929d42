"""k-plane transforms on the flat, spherical and hyperbolic model spaces.

All three transforms are evaluated in the chart.  For a chart plane ``pi``
with foot ``b`` and orthonormal frame ``F`` the transform is

    R_0 f(pi)  = int f(b + lam F) dlam,
    R_+- f(pi) = c_+- int f(x) <pi>_+- <x>_+-^{-(k+1)} dlam,   x = b + lam F,

with ``c_+ = 2`` (both hemispheres) and ``c_- = 1``.  An independent route
(``method="polar"``) integrates in geodesic polar coordinates on the model
space itself and never uses the chart density.
"""

from dataclasses import dataclass, replace
import math

import numpy as np

from . import kernels
from .errors import SupportError
from .geometry import (
    Quadric, _sign, chart_lift, chart_project, parallelotope_volume, parse_nu, plane_bracket,
    plane_from_points,
)
from .lorentz import PureBoost, induced_map
from .functions import ChartPullback, Lifted
from .quadrature import (
    EPS, Estimate, Quadrature, _complement, agree, graded_rule, integrate_plane_measure,
    plane_rule, planes_from_directions, sphere_area, sphere_rule, unit_ball_rule,
    whole_space_rule,
)

HYPERBOLIC_MARGIN = 0.05


def _require_ball_support(f, what="function"):
    if f.support is None:
        raise SupportError(f"{what} must have bounded support inside the unit ball")
    r = f.support.max_norm()
    if r >= 1.0:
        raise SupportError(f"{what} support reaches radius {r:.6g} >= 1")
    return r


# ---------------------------------------------------------------------------
# batched chart integrals over planes


def _plane_parametrisation(f, base, frame, nu):
    """Per-plane affine substitution ``lam = m + y T^T`` adapted to f.

    Returns ``(m, T, ok, bounded)``: with a support quadric ``y`` ranges over
    the unit ball and ``T`` maps it onto the exact support section; otherwise
    ``y`` ranges over R^k and the substitution makes f's shape hint isotropic.
    """
    if f.support is not None:
        m, T, ok = f.support.restrict(base, frame)
        return m, T, ok, True
    if nu == "-":
        raise SupportError("hyperbolic transforms need ball-supported functions")
    c, M = f.shape_hint()
    Minv = np.linalg.inv(M)
    y0 = (base - c) @ Minv.T
    G = frame @ Minv.T
    S = G @ np.transpose(G, (0, 2, 1))
    gy = np.einsum("nkd,nd->nk", G, y0)
    lam_star = -np.linalg.solve(S, gy[..., None])[..., 0]
    y_star = y0 + np.einsum("nk,nkd->nd", lam_star, G)
    rho = np.sqrt(1.0 + np.sum(y_star * y_star, axis=1))
    R = np.linalg.cholesky(S)
    kk = frame.shape[1]
    Rinv = np.linalg.solve(R, np.broadcast_to(np.eye(kk), S.shape))
    T = rho[:, None, None] * np.transpose(Rinv, (0, 2, 1))
    return lam_star, T, np.ones(base.shape[0], dtype=bool), False


def _plane_values(f, base, frame, nu, order, levels, grading=0.25, chunk=1 << 21):
    """Single-resolution transform values for planes ``base (N, d)``, ``frame (N, k, d)``."""
    N, k, d = frame.shape
    m, T, ok, bounded = _plane_parametrisation(f, base, frame, nu)
    if bounded:
        y, wy = unit_ball_rule(k, order, levels, grading)
    else:
        y, wy = whole_space_rule(k, order, levels, grading)
    n = len(wy)
    out = np.zeros(N)
    jac = np.abs(np.linalg.det(T))
    step = max(1, chunk // max(1, n * d))
    sgn = None if nu == "0" else _sign(nu)
    for s in range(0, N, step):
        sl = slice(s, min(N, s + step))
        idx = np.flatnonzero(ok[sl]) + s
        if idx.size == 0:
            continue
        lam = m[idx, None, :] + np.einsum("nj,Bij->Bni", y, T[idx])
        x = base[idx, None, :] + np.einsum("Bnk,Bkd->Bnd", lam, frame[idx])
        vals = f(x)
        if sgn is not None:
            b2 = np.sum(base[idx] * base[idx], axis=1)
            r2 = np.sum(x * x, axis=2)
            vals = vals * (np.sqrt(1.0 + sgn * b2)[:, None] * (1.0 + sgn * r2) ** (-(k + 1) / 2.0))
        out[idx] = (vals @ wy) * jac[idx]
    if nu == "+":
        out *= 2.0
    return out


def plane_transform_values(f, base, frame, nu, q):
    """Transform values and per-plane error estimates for a batch of planes."""
    nu = parse_nu(nu)
    if nu == "-":
        _require_ball_support(f)
    base = np.atleast_2d(np.asarray(base, dtype=float))
    frame = np.asarray(frame, dtype=float)
    if frame.ndim == 2:
        frame = frame[None]
    if frame.shape[0] != base.shape[0]:
        frame = np.broadcast_to(frame, (base.shape[0],) + frame.shape[1:])
    coarse = _plane_values(f, base, frame, nu, q.order, q.levels, q.grading, q.chunk)
    fine = _plane_values(f, base, frame, nu, 2 * q.order, q.levels, q.grading, q.chunk)
    return fine, np.abs(fine - coarse) + 32 * EPS * np.abs(fine)


def _ray_chords(support, base, dirs):
    """Chart parameters ``[lo, hi]`` (clipped to ``s >= 0``) of the rays ``base + s dirs`` inside support."""
    n = len(dirs)
    m, T, ok = support.restrict(np.broadcast_to(base, (n, len(base))), dirs[:, None, :])
    half = np.abs(T[:, 0, 0])
    lo = np.clip(m[:, 0] - half, 0.0, None)
    hi = np.clip(m[:, 0] + half, 0.0, None)
    hi = np.where(ok, hi, lo)
    return lo, hi


def _direction_rule(support, pi, order, levels, grading):
    """Directions (plane coordinates) and weights for rays from the foot of pi.

    For planes of dimension two whose foot lies outside the support, only the
    arc of directions between the two tangent rays carries mass; integrating
    over that arc with a graded rule removes the square-root behaviour at the
    tangent directions that a periodic rule resolves poorly.
    """
    k = pi.k
    u, wu = sphere_rule(k, order)
    if k != 2 or support is None:
        return u, wu
    c, T, ok = support.restrict(pi.base[None], pi.frame[None])
    if not ok[0]:
        return u[:0], wu[:0]
    c, T = c[0], T[0]
    y0 = -np.linalg.solve(T, c)
    r0 = float(np.linalg.norm(y0))
    if r0 <= 1.0:
        return u, wu
    alpha = math.acos(1.0 / r0)
    e = y0 / r0
    e_perp = np.array([-e[1], e[0]])
    ends = [c + T @ (math.cos(alpha) * e + sgn * math.sin(alpha) * e_perp) for sgn in (1.0, -1.0)]
    th = [math.atan2(v[1], v[0]) for v in ends]
    mid = math.atan2(c[1], c[0])
    lo, width = th[0], (th[1] - th[0]) % (2 * np.pi)
    if (mid - lo) % (2 * np.pi) > width:
        # the arc through the centre direction runs the other way
        lo, width = th[1], 2 * np.pi - width
    t, wt = graded_rule(order, levels, grading)
    ang = lo + width * t
    return np.stack([np.cos(ang), np.sin(ang)], axis=1), width * wt


def _geodesic_polar(f, pi, nu, order, levels, grading=0.25):
    """Integral over p^{-1}(pi) in geodesic polar coordinates about the lifted foot point.

    In the chart every geodesic ray from the foot is a straight half-line, so
    with a known support each ray is clipped to its exact chord and the
    radial rule never straddles the support edge.
    """
    k, d = pi.k, pi.d
    support = f.support
    if nu == "-":
        _require_ball_support(f)
    u, wu = _direction_rule(support, pi, order, levels, grading)
    if len(u) == 0:
        return 0.0
    t, wt = graded_rule(order, levels, grading)
    b2 = float(pi.base @ pi.base)
    dirs = u @ pi.frame
    if support is not None:
        lo, hi = _ray_chords(support, pi.base, dirs)
    if nu == "0":
        if support is None:
            phi = 0.5 * np.pi * t
            s = math.sqrt(1.0 + b2) * np.tan(phi)
            ws = math.sqrt(1.0 + b2) * 0.5 * np.pi * wt / np.cos(phi) ** 2
            r = np.broadcast_to(s, (len(u), len(t)))
            wr = np.broadcast_to(ws * s ** (k - 1), r.shape)
        else:
            r = lo[:, None] + (hi - lo)[:, None] * t
            wr = (hi - lo)[:, None] * wt * r ** (k - 1)
        x = pi.base + r[..., None] * dirs[:, None, :]
        vals = f(x.reshape(-1, d)).reshape(r.shape)
        return float(wu @ np.sum(wr * vals, axis=1))
    z0 = chart_lift(pi.base, nu)
    # the chart point of the curved ray with tangent -dirs is base + s dirs
    tangent = np.concatenate([-dirs, np.zeros((len(u), 1))], axis=1)
    if nu == "-":
        scale = math.sqrt(1.0 - b2)
        rlo = np.arctanh(np.clip(lo / scale, 0.0, 1.0 - 1e-16))
        rhi = np.arctanh(np.clip(hi / scale, 0.0, 1.0 - 1e-16))
        r = rlo[:, None] + (rhi - rlo)[:, None] * t
        wr = (rhi - rlo)[:, None] * wt * np.sinh(r) ** (k - 1)
        cr, sr = np.cosh(r), np.sinh(r)
    else:
        if support is not None:
            # chart functions are even on the sphere: integrate the hemisphere around z0 and double
            scale = math.sqrt(1.0 + b2)
            rlo, rhi = np.arctan(lo / scale), np.arctan(hi / scale)
            r = rlo[:, None] + (rhi - rlo)[:, None] * t
            wr = 2.0 * (rhi - rlo)[:, None] * wt * np.sin(r) ** (k - 1)
        else:
            r = np.broadcast_to(np.pi * t, (len(u), len(t)))
            wr = np.pi * wt * np.sin(r) ** (k - 1)
        cr, sr = np.cos(r), np.sin(r)
    zeta = cr[..., None] * z0 + sr[..., None] * tangent[:, None, :]
    x = chart_project(zeta.reshape(-1, d + 1), nu)
    vals = f(x).reshape(r.shape)
    return float(wu @ np.sum(wr * vals, axis=1))


def kplane_transform(f, pi, nu, q, method="chart"):
    """R_nu f(pi) as an :class:`Estimate` (two-resolution error)."""
    nu = parse_nu(nu)
    if nu == "-":
        plane_bracket(pi, "-")
    if method == "chart":
        v, e = plane_transform_values(f, pi.base[None], pi.frame[None], nu, q)
        return Estimate(float(v[0]), float(e[0]), {"method": "chart"})
    if method == "polar":
        coarse = _geodesic_polar(f, pi, nu, q.order, q.levels, q.grading)
        fine = _geodesic_polar(f, pi, nu, 2 * q.order, q.levels, q.grading)
        return Estimate(fine, abs(fine - coarse) + 32 * EPS * abs(fine), {"method": "polar"})
    raise ValueError(f"unknown method {method!r}")


def rtilde(f, points, q):
    """Integral of f over the affine map ``lam -> x_0 + sum lam_i (x_i - x_0)``, lam in R^k."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    plane_from_points(pts)  # degeneracy check
    base = pts[0]
    edges = pts[1:] - pts[0]
    v, e = plane_transform_values(f, base[None], edges[None], "0", q)
    return Estimate(float(v[0]), float(e[0]))


def det_relation_sides(f, points, q):
    """(parallelotope volume x rtilde, R_0 f(pi)); the two agree for every f."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lhs = rtilde(f, pts, q).scaled(parallelotope_volume(pts))
    rhs = kplane_transform(f, plane_from_points(pts), "0", q)
    return lhs, rhs


# ---------------------------------------------------------------------------
# norms


def _space_nodes(f, nu, order, levels, grading):
    d = f.d
    if f.support is not None:
        c, T = f.support.ellipsoid_map()
        y, wy = unit_ball_rule(d, order, levels, grading)
        return c + y @ T.T, wy * abs(np.linalg.det(T))
    if nu == "-":
        raise SupportError("hyperbolic norms need ball-supported functions")
    c, M = f.shape_hint()
    y, wy = whole_space_rule(d, order, levels, grading)
    return c + y @ M.T, wy * abs(np.linalg.det(M))


def volume_density(x, nu):
    """Riemannian volume density of the chart (1 for the flat space)."""
    nu = parse_nu(nu)
    if nu == "0":
        return np.ones(x.shape[:-1])
    s = _sign(nu)
    d = x.shape[-1]
    return (1.0 + s * np.sum(x * x, axis=-1)) ** (-(d + 1) / 2.0)


def _power_integral(f, nu, p, order, levels, grading):
    x, w = _space_nodes(f, nu, order, levels, grading)
    vals = np.abs(f(x)) ** p * volume_density(x, nu)
    tot = float(w @ vals)
    if nu == "+":
        tot *= 2.0
    return tot, float(np.abs(w) @ np.abs(vals))


def _polar_power_integral(f, nu, p, order, levels, grading):
    """int |f|^p dvol in geodesic polar coordinates about the base point of the model space."""
    d = f.d
    u, wu = sphere_rule(d, order)
    t, wt = graded_rule(order, levels, grading)
    if nu == "-":
        rmax = math.atanh(_require_ball_support(f))
        r = rmax * t
        wr = rmax * wt * np.sinh(r) ** (d - 1)
        x = -(np.tanh(r)[:, None, None] * u[None]).reshape(-1, d)
    else:
        if f.support is not None:
            # even on the sphere: the cap |x| <= R and its antipode contribute equally
            rmax = math.atan(f.support.max_norm())
            r = rmax * t
            wr = 2.0 * rmax * wt * np.sin(r) ** (d - 1)
        else:
            r = np.pi * t
            wr = np.pi * wt * np.sin(r) ** (d - 1)
        # zeta = (sin r u, cos r) has chart image -tan(r) u
        x = -(np.tan(r)[:, None, None] * u[None]).reshape(-1, d)
    vals = (np.abs(f(x)) ** p).reshape(len(r), len(u))
    terms = wr[:, None] * vals * wu[None, :]
    return float(np.sum(terms)), float(np.sum(np.abs(terms)))


def lp_integral(f, nu, p, q, method="chart"):
    """int |f|^p dvol over the model space (sphere = both hemispheres).

    ``method="polar"`` (curved spaces only) integrates in geodesic polar
    coordinates on the model space and does not use the chart density.
    """
    nu = parse_nu(nu)
    if nu == "-":
        _require_ball_support(f)
    p = float(p)
    if method == "chart":
        rule = _power_integral
    elif method == "polar" and nu != "0":
        rule = _polar_power_integral
    else:
        raise ValueError(f"unknown method {method!r} for nu={nu!r}")
    c, _ = rule(f, nu, p, q.order, q.levels, q.grading)
    fn, ab = rule(f, nu, p, 2 * q.order, q.levels, q.grading)
    return Estimate(fn, abs(fn - c) + 32 * EPS * ab, {"method": method})


def lp_norm(f, nu, p, q, method="chart"):
    """|f|_p on the indicated model space."""
    return lp_integral(f, nu, p, q, method).power(1.0 / float(p))


def _is_centered_radial(f):
    if not f.radial:
        return False
    if f.support is not None:
        return bool(np.linalg.norm(f.support.center) < 1e-14)
    c, _ = f.shape_hint()
    return bool(np.linalg.norm(c) < 1e-14)


def plane_measure_weight(base, nu):
    """Density of the manifold plane measure against dmu_flat: <pi>^{-d-1} (1 for nu=0)."""
    nu = parse_nu(nu)
    if nu == "0":
        return np.ones(base.shape[0])
    s = _sign(nu)
    d = base.shape[1]
    b2 = np.sum(base * base, axis=1)
    arg = 1.0 + s * b2
    out = np.zeros_like(b2)
    good = arg > 0
    out[good] = arg[good] ** (-(d + 1) / 2.0)
    return out


def _outer_rule(f, d, k, nu, order, levels, grading):
    radial = _is_centered_radial(f)
    if f.support is not None:
        c, r = f.support.bounding_ball()
        return plane_rule(d, k, order, levels, support=(c, r), grading=grading, radial=radial)
    c, M = f.shape_hint()
    scale = float(np.linalg.norm(M, 2))
    return plane_rule(d, k, order, levels, grading=grading, center=c, scale=scale, radial=radial)


def _lq_integral_once(f, k, nu, qexp, order, levels, grading, chunk):
    d = f.d
    base, frame, w = _outer_rule(f, d, k, nu, order, levels, grading)
    vals = _plane_values(f, base, frame, nu, order, levels, grading, chunk)
    terms = w * np.abs(vals) ** qexp * plane_measure_weight(base, nu)
    return float(np.sum(terms)), float(np.sum(np.abs(terms)))


def transform_lq_integral(f, k, nu, qexp, quad):
    """int |R_nu f|^q over plane space (pushforward measure for the curved spaces)."""
    nu = parse_nu(nu)
    if nu == "-":
        _require_ball_support(f)
    qexp = float(qexp)
    c, _ = _lq_integral_once(f, k, nu, qexp, quad.order, quad.levels, quad.grading, quad.chunk)
    fn, ab = _lq_integral_once(f, k, nu, qexp, 2 * quad.order, quad.levels, quad.grading, quad.chunk)
    return Estimate(fn, abs(fn - c) + 32 * EPS * ab)


def transform_lq_norm(f, k, nu, qexp, quad):
    """|R_nu f|_q over the space of k-planes."""
    return transform_lq_integral(f, k, nu, qexp, quad).power(1.0 / float(qexp))


# ---------------------------------------------------------------------------
# identities


@dataclass(frozen=True)
class Sides:
    """Two independently computed sides of an identity."""

    name: str
    lhs: Estimate
    rhs: Estimate
    params: str = ""

    @property
    def passed(self):
        return agree(self.lhs, self.rhs, 3.0)

    def row(self):
        return [self.name, self.params, self.lhs.value, self.rhs.value,
                self.lhs.stderr, self.rhs.stderr, self.passed]


def transfer_sides(f, pi, quad):
    """``R_-(P_- f)`` over ``p^{-1}(pi)`` (geodesic polar route) and ``<pi>_- R_0 f(pi)`` (chart)."""
    k = pi.k
    bracket_pi = plane_bracket(pi, "-")
    _require_ball_support(f)
    lhs = kplane_transform(Lifted(f, "-", k), pi, "-", quad, method="polar")
    rhs = kplane_transform(f, pi, "0", quad).scaled(bracket_pi)
    return Sides("transfer", lhs, rhs, f"d={pi.d};k={k};dist={pi.distance:.17g}")


def equivariance_sides(g, B, pi, quad):
    """``R_- g(L pi)`` (chart route on the image plane) and ``R_-(L^* g)(pi)`` (polar route)."""
    if not isinstance(B, PureBoost):
        B = PureBoost(*B)
    d = pi.d
    phi = induced_map(B, d)
    _require_ball_support(g)
    plane_bracket(pi, "-")
    image = phi.map_plane(pi)
    pulled = ChartPullback(g, B.a, B.b, 0)
    # precondition: both planes meet the (pulled back) support
    _, _, ok_image = g.support.restrict(image.base[None], image.frame[None])
    _, _, ok_plane = pulled.support.restrict(pi.base[None], pi.frame[None])
    if not (ok_image[0] and ok_plane[0]):
        raise SupportError("boosted plane misses the support of g")
    lhs = kplane_transform(g, image, "-", quad)
    rhs = kplane_transform(pulled, pi, "-", quad, method="polar")
    return Sides("equivariance", lhs, rhs, f"a={B.a:.17g};b={B.b:.17g};dist={pi.distance:.17g}")


def _mc_quad(quad, seed_offset):
    return replace(quad, seed=(quad.seed + seed_offset) % 2 ** 64)


def invariance_sides(F, B, quad, d=2, k=1):
    """``int F <pi>_-^{-d-1} dmu`` and ``int F(Phi(pi)) <pi>_-^{-d-1} dmu``.

    The right side is integrated over planes meeting the preimage of F's
    support ball; Monte Carlo sides use seeds ``seed`` and ``seed + 1``.
    """
    if not isinstance(B, PureBoost):
        B = PureBoost(*B)
    phi = induced_map(B, d)
    c, r = F.support
    if np.linalg.norm(c) + r >= 1.0:
        raise SupportError("plane function must live on planes meeting a ball inside the unit ball")
    pre = Quadric.ball(c, r).projective_pullback(phi.H)
    pre_ball = pre.bounding_ball()

    def weight(base, frame):
        return plane_measure_weight(base, "-")

    def pulled(base, frame):
        out = np.zeros(base.shape[0])
        inside = np.sum(base * base, axis=1) < 1.0
        if np.any(inside):
            nb, nf = phi.map_planes(base[inside], frame[inside])
            out[inside] = F(nb, nf)
        return out

    lhs = integrate_plane_measure(F, d, k, quad, weight=weight, support=(np.asarray(c), r))
    rhs = integrate_plane_measure(pulled, d, k, _mc_quad(quad, 1) if quad.is_mc else quad,
                                  weight=weight, support=pre_ball)
    return Sides("invariance", lhs, rhs, f"a={B.a:.17g};b={B.b:.17g}")


# ---------------------------------------------------------------------------
# Drury's formula

# lhs / rhs for the frozen measure convention; exact (Crofton) for lines in the plane
DRURY_CALIBRATION = {(2, 1): 1.0}
DET_GUARD = 1e-8


@dataclass(frozen=True)
class DrurySides:
    lhs: Estimate
    rhs: Estimate
    calibration: float
    calibration_err: float
    defined: bool

    def consistent_with(self, c, sigmas=3.0):
        return self.defined and abs(self.calibration - c) <= sigmas * self.calibration_err


def _planes_through(pts):
    """Canonical (base, frame) of the planes through tuples ``pts (N, k+1, d)``."""
    N, m, d = pts.shape
    k = m - 1
    if k == 1:
        base, u = kernels.lines_through(np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]))
        return base, u[:, None, :]
    if k == d - 1 == 2:
        n = np.cross(pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0])
        n /= np.linalg.norm(n, axis=1)[:, None]
        frame, _ = planes_from_directions(n, k)
        base = np.sum(pts[:, 0] * n, axis=1)[:, None] * n
        return base, frame
    raise NotImplementedError("tuples supported for k = 1 and (d, k) = (3, 2)")


def _unit_vectors(rng, n, d):
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1)[:, None]


def _drury_rhs_batch(f, F, d, k, n, rng, c, R):
    """Importance-sampled tuple integrand; the proposal cancels the Det^{k-d} singularity."""
    vol = math.pi ** (d / 2) / math.gamma(d / 2 + 1) * R ** d
    x0 = c + _unit_vectors(rng, n, d) * (R * rng.random(n) ** (1.0 / d))[:, None]
    rho = 2 * R * rng.random(n)
    om = _unit_vectors(rng, n, d)
    x1 = x0 + rho[:, None] * om
    if k == 1:
        pts = np.stack([x0, x1], axis=1)
        det = rho
        # p(x1 | x0) = 1 / (2R |S^{d-1}| rho^{d-1})
        wgt = vol * 2 * R * sphere_area(d) * np.ones(n)
    else:
        zc = np.einsum("nd,nd->n", c - x0, om)
        z = zc - R + 2 * R * rng.random(n)
        h = 2 * R * rng.random(n)
        psi = 2 * np.pi * rng.random(n)
        e12 = _complement(om)
        radial = np.cos(psi)[:, None] * e12[:, 0] + np.sin(psi)[:, None] * e12[:, 1]
        x2 = x0 + z[:, None] * om + h[:, None] * radial
        pts = np.stack([x0, x1, x2], axis=1)
        det = 0.5 * rho * h
        # 1/p = (2R 4 pi rho^2)(2R 2R 2 pi h); Det^{-1} = 2/(rho h)
        wgt = vol * (2 * R * 4 * np.pi) * (4 * R * R * 2 * np.pi) * 2.0 * rho
    vals = np.ones(n)
    for j in range(k + 1):
        vals = vals * f(pts[:, j])
    live = (vals != 0.0) & (det >= DET_GUARD)
    out = np.zeros(n)
    if np.any(live):
        base, frame = _planes_through(pts[live])
        out[live] = vals[live] * F(base, frame) * wgt[live]
    return out


def drury_sides(f, F, dims, quad, inner=None):
    """Both sides of Drury's formula and their ratio (the calibration constant).

    lhs = int |R_0 f|^{k+1} F dmu (planes by Monte Carlo, transforms by quadrature),
    rhs = int f(x_0)...f(x_k) F(pi(x)) Det^{k-d} dx (tuples by importance sampling).
    """
    d, k = dims.d, dims.k
    inner = inner or Quadrature(order=8, levels=0)
    if f.support is None:
        raise SupportError("Drury sides need a compactly supported f")
    cf, rf = f.support.bounding_ball()
    cF, rF = F.support
    support = (cf, rf) if rf <= rF else (np.asarray(cF, dtype=float), rF)

    def lhs_integrand(base, frame):
        v, _ = plane_transform_values(f, base, frame, "0", inner)
        out = np.abs(v) ** (k + 1)
        nz = out != 0
        res = np.zeros_like(out)
        if np.any(nz):
            res[nz] = out[nz] * F(base[nz], frame[nz])
        return res

    if quad.is_mc:
        lhs = integrate_plane_measure(lhs_integrand, d, k, quad, support=support)
        rng = _mc_quad(quad, 1).rng(2)
        chunks = []
        done = 0
        while done < quad.samples:
            n = min(quad.chunk // 16, quad.samples - done)
            chunks.append(_drury_rhs_batch(f, F, d, k, n, rng, cf, rf))
            done += n
        vals = np.concatenate(chunks)
        rhs = Estimate(float(np.mean(vals)), float(np.std(vals, ddof=1)) / math.sqrt(len(vals)),
                       {"samples": len(vals)})
    else:
        raise ValueError("Drury sides are computed by Monte Carlo")
    if rhs.value == 0.0:
        return DrurySides(lhs, rhs, math.nan, math.inf, False)
    cal = lhs.value / rhs.value
    err = abs(cal) * (lhs.stderr / abs(lhs.value) if lhs.value else 0.0) + abs(cal) * rhs.stderr / abs(rhs.value)
    return DrurySides(lhs, rhs, cal, err, True)


__all__ = [
    "kplane_transform", "plane_transform_values", "rtilde", "det_relation_sides", "lp_norm",
    "lp_integral", "transform_lq_norm", "transform_lq_integral", "transfer_sides",
    "equivariance_sides", "invariance_sides", "drury_sides", "Sides", "DrurySides",
    "DRURY_CALIBRATION", "volume_density", "plane_measure_weight",
]
