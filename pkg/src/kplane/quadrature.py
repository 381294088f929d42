"""Tensor Gauss-Legendre and seeded Monte Carlo integration.

Deterministic rules are evaluated at two resolutions (``order`` and
``2*order`` nodes per panel on every axis); the finer value is reported and
the gap between the two serves as the error estimate.  Radial axes use
composite Gauss rules geometrically graded toward both endpoints, which keeps
peaked integrands (h_lambda at large lambda) and algebraic endpoint
behaviour (truncated functions) at spectral-like convergence.
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache
import math

import numpy as np

from . import kernels
from .errors import NonFiniteError
from .geometry import Quadric

EPS = np.finfo(float).eps

# Direction mass of the invariant measure on affine k-planes.  Directions carry
# Haar probability except for lines in the plane, where dmu = dtheta dt with
# theta in [0, pi).
DIRECTION_MASS = {(2, 1): math.pi}


def direction_mass(d, k):
    return DIRECTION_MASS.get((d, k), 1.0)


CONVENTION_ID = "kplane-haar-v1"
CONVENTION_TEXT = (
    "plane measure = direction mass x Haar probability on directions x Lebesgue on offsets; "
    "direction mass pi for (d,k)=(2,1) [dtheta dt, theta in [0,pi)], 1 otherwise; "
    "sphere integrals = 2 x hemisphere chart integral; "
    "manifold plane measures = pushforward of <pi>^(-d-1) dmu_flat"
)


@dataclass(frozen=True)
class Quadrature:
    """Integration settings.

    ``order`` is the Gauss order per panel (tensor) and ``levels`` the number
    of geometric grading levels toward each endpoint of a radial axis.
    """

    kind: str = "tensor_gauss"
    order: int = 16
    samples: int = 100_000
    seed: int = 0
    levels: int = 3
    grading: float = 0.25
    chunk: int = 1 << 21

    def __post_init__(self):
        if self.kind not in ("tensor_gauss", "monte_carlo"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if self.kind == "tensor_gauss" and self.order < 2:
            raise ValueError("tensor_gauss needs order >= 2")
        if self.kind == "monte_carlo" and self.samples < 100:
            raise ValueError("monte_carlo needs samples >= 100")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.levels < 0 or not 0 < self.grading < 0.5:
            raise ValueError("bad grading parameters")

    @property
    def is_mc(self):
        return self.kind == "monte_carlo"

    def refined(self, factor=2):
        if self.is_mc:
            return replace(self, samples=self.samples * factor)
        return replace(self, order=self.order * factor)

    def rng(self, offset=0):
        return np.random.default_rng([self.seed, offset])


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float = 0.0
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "stderr", float(self.stderr))
        if not math.isfinite(self.stderr):
            raise NonFiniteError("non-finite error estimate")

    def __iter__(self):
        yield self.value
        yield self.stderr

    def scaled(self, c):
        return Estimate(c * self.value, abs(c) * self.stderr, self.meta)

    def power(self, e):
        """First-order propagation through v -> v**e."""
        if self.value == 0.0:
            return Estimate(0.0, self.stderr ** e if e > 0 else math.inf)
        v = self.value ** e
        return Estimate(v, abs(e * v / self.value) * self.stderr, self.meta)


def agree(lhs, rhs, sigmas=3.0):
    """|lhs - rhs| <= sigmas * (stderr_lhs + stderr_rhs)."""
    return abs(lhs.value - rhs.value) <= sigmas * (lhs.stderr + rhs.stderr)


# ---------------------------------------------------------------------------
# one-dimensional rules


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Nodes and weights on [-1, 1] (read-only arrays)."""
    x, w = kernels.gauss_legendre(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_rule(a, b, n):
    x, w = gauss_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@lru_cache(maxsize=None)
def graded_rule(n, levels, grading=0.25):
    """Composite Gauss rule on [0, 1] graded geometrically toward both ends."""
    if levels == 0:
        x, w = gauss_rule(0.0, 1.0, n)
    else:
        left = [0.0] + [0.5 * grading ** j for j in range(levels, -1, -1)]
        right = [1.0 - t for t in left[-2::-1]]
        breaks = np.array(left + right)
        xs, ws = [], []
        for a, b in zip(breaks[:-1], breaks[1:]):
            xi, wi = gauss_rule(a, b, n)
            xs.append(xi)
            ws.append(wi)
        x, w = np.concatenate(xs), np.concatenate(ws)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def sphere_rule(m, n):
    """Rule on the unit sphere S^{m-1} in R^m; weights sum to its area."""
    if m == 1:
        u = np.array([[1.0], [-1.0]])
        w = np.ones(2)
    elif m == 2:
        nt = 2 * n
        th = (np.arange(nt) + 0.5) * (2 * np.pi / nt)
        u = np.stack([np.cos(th), np.sin(th)], axis=1)
        w = np.full(nt, 2 * np.pi / nt)
    elif m == 3:
        z, wz = gauss_legendre(n)
        nt = 2 * n
        ph = (np.arange(nt) + 0.5) * (2 * np.pi / nt)
        s = np.sqrt(1.0 - z * z)
        u = np.stack([
            np.outer(s, np.cos(ph)).ravel(),
            np.outer(s, np.sin(ph)).ravel(),
            np.repeat(z, nt),
        ], axis=1)
        w = np.outer(wz, np.full(nt, 2 * np.pi / nt)).ravel()
    else:
        raise NotImplementedError("sphere rules only for m <= 3")
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


def sphere_area(m):
    return 2 * math.pi ** (m / 2) / math.gamma(m / 2)


@lru_cache(maxsize=None)
def unit_ball_rule(m, n, levels, grading=0.25):
    """Polar rule on the closed unit ball of R^m."""
    r, wr = graded_rule(n, levels, grading)
    u, wu = sphere_rule(m, n)
    y = (r[:, None, None] * u[None, :, :]).reshape(-1, m)
    w = np.outer(wr * r ** (m - 1), wu).ravel()
    y.setflags(write=False)
    w.setflags(write=False)
    return y, w


@lru_cache(maxsize=None)
def whole_space_rule(m, n, levels, grading=0.25):
    """Polar rule on R^m with radius tan(phi), phi in [0, pi/2)."""
    t, wt = graded_rule(n, levels, grading)
    phi = 0.5 * np.pi * t
    r = np.tan(phi)
    jac = 0.5 * np.pi * wt / np.cos(phi) ** 2
    u, wu = sphere_rule(m, n)
    y = (r[:, None, None] * u[None, :, :]).reshape(-1, m)
    w = np.outer(jac * r ** (m - 1), wu).ravel()
    y.setflags(write=False)
    w.setflags(write=False)
    return y, w


# ---------------------------------------------------------------------------
# domains and the generic integrator


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    @property
    def dim(self):
        return len(self.lo)

    @property
    def volume(self):
        return float(np.prod(np.subtract(self.hi, self.lo)))


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    @property
    def dim(self):
        return len(self.center)

    @property
    def volume(self):
        m = self.dim
        return math.pi ** (m / 2) / math.gamma(m / 2 + 1) * self.radius ** m


def _check_finite(vals, pts):
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        loc = np.asarray(pts)[i].tolist()
        raise NonFiniteError(f"non-finite integrand value at {loc}", location=loc)


def _weighted_sum(w, vals):
    terms = w * vals
    return float(np.sum(terms)), float(np.sum(np.abs(terms)))


def _tensor_nodes(domain, q):
    if isinstance(domain, Box):
        axes = []
        for a, b in zip(domain.lo, domain.hi):
            t, wt = graded_rule(q.order, q.levels, q.grading)
            axes.append((a + (b - a) * t, (b - a) * wt))
        grids = np.meshgrid(*[ax[0] for ax in axes], indexing="ij")
        wgrid = np.meshgrid(*[ax[1] for ax in axes], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        w = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
        return pts, w
    if isinstance(domain, Ball):
        y, w = unit_ball_rule(domain.dim, q.order, q.levels, q.grading)
        r = domain.radius
        return np.asarray(domain.center) + r * y, w * r ** domain.dim
    raise TypeError(f"unsupported domain {domain!r}")


def _mc_nodes(domain, q, rng):
    n = q.samples
    if isinstance(domain, Box):
        lo, hi = np.asarray(domain.lo, float), np.asarray(domain.hi, float)
        return lo + (hi - lo) * rng.random((n, domain.dim))
    m = domain.dim
    g = rng.standard_normal((n, m))
    g /= np.linalg.norm(g, axis=1)[:, None]
    r = domain.radius * rng.random(n) ** (1.0 / m)
    return np.asarray(domain.center) + g * r[:, None]


def integrate(f, domain, q):
    """Integrate a vectorised ``f(points) -> values`` over a Box or Ball."""
    if q.is_mc:
        pts = _mc_nodes(domain, q, q.rng())
        vals = np.asarray(f(pts), dtype=float)
        _check_finite(vals, pts)
        vol = domain.volume
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1)) / math.sqrt(len(vals))
        return Estimate(vol * mean, vol * se, {"samples": len(vals)})
    results = []
    for qq in (q, q.refined()):
        pts, w = _tensor_nodes(domain, qq)
        vals = np.asarray(f(pts), dtype=float)
        _check_finite(vals, pts)
        results.append(_weighted_sum(w, vals))
    (coarse, _), (fine, absum) = results
    return Estimate(fine, float(abs(fine - coarse) + 32 * EPS * absum), {"nodes": len(w)})


# ---------------------------------------------------------------------------
# affine plane space


def _complement(u):
    """Orthonormal basis (d-1, d) of u^perp via the Householder map e_d -> u."""
    n, d = u.shape
    e = np.zeros(d)
    e[-1] = 1.0
    v = u - e
    nv = np.linalg.norm(v, axis=1)
    flip = nv < 1e-12
    v[flip] = 0.0
    v[~flip] /= nv[~flip, None]
    H = np.eye(d)[None] - 2 * v[:, :, None] * v[:, None, :]
    # H maps e_d to u, so its first d-1 columns span u^perp
    return np.transpose(H[:, :, : d - 1], (0, 2, 1))


def planes_from_directions(u, k):
    """(frame, complement) bases for planes whose direction (k=1) or normal (k=d-1) is u."""
    d = u.shape[1]
    comp = _complement(u)
    if k == d - 1:
        return comp, u[:, None, :]
    if k == 1:
        return u[:, None, :], comp
    raise NotImplementedError("plane rules need k = 1 or k = d-1")


def plane_rule(d, k, order, levels, support=None, grading=0.25, center=None, scale=1.0,
               radial=False):
    """Tensor rule on affine k-plane space under the frozen invariant measure.

    ``support`` is an optional ball ``(center, radius)``: only planes meeting it
    are covered.  Without it the offsets range over all of R^{d-k} through the
    tan substitution, centred at the projection of ``center`` with length
    ``scale``.  ``radial=True`` uses a single direction carrying the whole
    direction mass (for integrands invariant under rotations about the origin).
    Returns ``base (N, d)``, ``frame (N, k, d)``, ``w (N,)``.
    """
    if radial:
        u = np.zeros((1, d))
        u[0, -1] = 1.0
        wu = np.array([direction_mass(d, k)])
    else:
        u, wu = sphere_rule(d, order)
        wu = wu * (direction_mass(d, k) / sphere_area(d))
    frame, comp = planes_from_directions(np.array(u), k)
    m = d - k
    if support is None:
        y, wy = whole_space_rule(m, order, levels, grading)
        c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
        radius = float(scale)
        wy = wy * radius ** m
    else:
        c, radius = support
        c = np.asarray(c, dtype=float)
        y, wy = unit_ball_rule(m, order, levels, grading)
        wy = wy * radius ** m
    # projection of the center onto the offset space
    shift = np.einsum("nmd,d,nme->ne", comp, c, comp)
    offs = radius * np.einsum("jm,nmd->njd", y, comp)
    base = (shift[:, None, :] + offs).reshape(-1, d)
    fr = np.repeat(frame, len(y), axis=0)
    w = np.outer(wu, wy).ravel()
    return base, fr, w


def sample_planes(d, k, n, rng, support):
    """Haar directions (orthonormalised Gaussian frames) and uniform offsets in a ball."""
    c, radius = support
    c = np.asarray(c, dtype=float)
    g = rng.standard_normal((n, d, d))
    qm, rm = np.linalg.qr(g)
    qm = qm * np.sign(np.einsum("nii->ni", rm))[:, None, :]
    frame = np.transpose(qm[:, :, :k], (0, 2, 1))
    comp = np.transpose(qm[:, :, k:], (0, 2, 1))
    m = d - k
    z = rng.standard_normal((n, m))
    z /= np.linalg.norm(z, axis=1)[:, None]
    z *= (radius * rng.random(n) ** (1.0 / m))[:, None]
    shift = np.einsum("nmd,d,nme->ne", comp, c, comp)
    base = shift + np.einsum("nm,nmd->nd", z, comp)
    vol = math.pi ** (m / 2) / math.gamma(m / 2 + 1) * radius ** m
    return base, frame, direction_mass(d, k) * vol


def integrate_plane_measure(F, d, k, q, weight=None, support=None):
    """Integrate ``F(base, frame)`` over affine k-planes of R^d.

    ``weight(base, frame)`` multiplies pointwise (e.g. ``<pi>^{-d-1}``).
    Monte Carlo needs a ``support`` ball; tensor rules fall back to the tan
    substitution on offsets without one.
    """

    def integrand(base, frame):
        vals = np.asarray(F(base, frame), dtype=float)
        if weight is not None:
            vals = vals * weight(base, frame)
        _check_finite(vals, base)
        return vals

    if q.is_mc:
        if support is None:
            raise ValueError("Monte Carlo plane integration needs a support ball")
        rng = q.rng(1)
        vals = []
        done = 0
        mass = None
        while done < q.samples:
            n = min(q.chunk // 8, q.samples - done)
            base, frame, mass = sample_planes(d, k, n, rng, support)
            vals.append(integrand(base, frame))
            done += n
        vals = np.concatenate(vals)
        return Estimate(mass * float(np.mean(vals)),
                        mass * float(np.std(vals, ddof=1)) / math.sqrt(len(vals)),
                        {"samples": len(vals)})
    sums = []
    for qq in (q, q.refined()):
        base, frame, w = plane_rule(d, k, qq.order, qq.levels, support, qq.grading)
        sums.append(_weighted_sum(w, integrand(base, frame)))
    (coarse, _), (fine, absum) = sums
    return Estimate(fine, float(abs(fine - coarse) + 32 * EPS * absum), {"planes": len(w)})


__all__ = [
    "Quadrature", "Estimate", "Box", "Ball", "Quadric", "integrate", "integrate_plane_measure",
    "plane_rule", "sample_planes", "gauss_legendre", "graded_rule", "sphere_rule",
    "unit_ball_rule", "whole_space_rule", "agree", "direction_mass", "CONVENTION_ID",
]
