"""Charts, brackets and affine k-planes.

The sphere and the hyperboloid sit in R^{d+1} as

    M_+ = {zeta : |zeta'|^2 + zeta_{d+1}^2 = 1},
    M_- = {zeta : zeta_{d+1}^2 - |zeta'|^2 = 1, zeta_{d+1} > 0},

and are flattened by the central (gnomonic / Klein) chart
``x = -zeta' / zeta_{d+1}``.  Totally geodesic k-submanifolds are exactly
the preimages of affine k-planes of the chart, so everything below works
with affine planes in R^d.
"""

from dataclasses import dataclass
from fractions import Fraction
import math
from typing import Callable

import numpy as np

from .errors import DegenerateSimplexError, DomainError, EquatorError
from . import kernels

NU_VALUES = ("0", "+", "-")

_NU_ALIASES = {
    "0": "0", "flat": "0", "r": "0",
    "+": "+", "plus": "+", "sphere": "+", "s": "+",
    "-": "-", "minus": "-", "hyperbolic": "-", "h": "-",
}


def parse_nu(nu):
    """Normalise a curvature tag to one of ``'0'``, ``'+'``, ``'-'``."""
    if isinstance(nu, (int, np.integer)):
        return {0: "0", 1: "+", -1: "-"}[int(nu)]
    key = str(nu).strip().lower()
    if key not in _NU_ALIASES:
        raise ValueError(f"unknown curvature tag {nu!r}")
    return _NU_ALIASES[key]


def _sign(sign):
    s = parse_nu(sign)
    if s == "0":
        raise ValueError("chart sign must be '+' or '-'")
    return 1.0 if s == "+" else -1.0


@dataclass(frozen=True)
class Dims:
    """Dimensions, curvature tag and the exponents p=(d+1)/(k+1), q=d+1."""

    d: int
    k: int
    nu: str = "0"

    def __post_init__(self):
        if int(self.d) != self.d or int(self.k) != self.k:
            raise ValueError("d and k must be integers")
        if self.d < 2:
            raise ValueError(f"d must be >= 2, got {self.d}")
        if not 1 <= self.k <= self.d - 1:
            raise ValueError(f"k must satisfy 1 <= k <= d-1, got k={self.k}, d={self.d}")
        object.__setattr__(self, "nu", parse_nu(self.nu))

    @property
    def p(self) -> Fraction:
        return Fraction(self.d + 1, self.k + 1)

    @property
    def q(self) -> Fraction:
        return Fraction(self.d + 1, 1)

    def with_nu(self, nu):
        return Dims(self.d, self.k, nu)


def bracket(x, sign):
    """Japanese bracket sqrt(1 +- |x|^2), vectorised over the last axis."""
    s = _sign(sign)
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    if s < 0 and np.any(r2 >= 1.0):
        raise DomainError("bracket(x, '-') needs |x| < 1")
    return np.sqrt(1.0 + s * r2)


def chart_project(zeta, sign):
    """Chart map zeta -> -zeta' / zeta_{d+1}."""
    _sign(sign)
    zeta = np.asarray(zeta, dtype=float)
    last = zeta[..., -1]
    if np.any(np.abs(last) < 1e-14):
        raise EquatorError("last ambient coordinate vanishes; point is on the equator")
    return -zeta[..., :-1] / last[..., None]


def chart_lift(x, sign):
    """Inverse chart (-x, 1) / <x>; upper sheet / upper hemisphere representative."""
    x = np.asarray(x, dtype=float)
    br = bracket(x, sign)
    out = np.concatenate([-x, np.ones(x.shape[:-1] + (1,))], axis=-1)
    return out / br[..., None]


def chart_metric(x, sign):
    """Pullback of the round / hyperbolic metric through :func:`chart_lift`.

    With s = +-1 and zeta = (-x, 1)/sqrt(1 + s|x|^2),

        d zeta = (-dx, 0)/<x> - s (x.dx) (-x, 1)/<x>^3,

    and contracting with the Euclidean (s=+1) or Minkowski (s=-1) form gives

        g_ij = delta_ij / (1 + s r^2) - s x_i x_j / (1 + s r^2)^2.
    """
    s = _sign(sign)
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)[..., None, None]
    outer = x[..., :, None] * x[..., None, :]
    return np.eye(d) / (1.0 + s * r2) - s * outer / (1.0 + s * r2) ** 2


def _canonical_frame(vectors, tol=1e-10):
    """Orthonormal frame of span(vectors) that depends only on the span.

    Pivoted Gram-Schmidt on the columns of the orthogonal projector, with
    near-ties resolved toward the lower coordinate index, then a sign fix
    (first non-negligible component positive).
    """
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    q, r = np.linalg.qr(v.T)
    k = v.shape[0]
    if np.min(np.abs(np.diag(r))) <= tol * max(1.0, np.max(np.abs(r))):
        raise DegenerateSimplexError("direction vectors are linearly dependent")
    proj = q @ q.T
    d = proj.shape[0]
    chosen = []
    cols = proj.copy()
    for _ in range(k):
        norms = np.linalg.norm(cols, axis=0)
        best = np.max(norms)
        j = int(np.argmax(norms >= best * (1.0 - 1e-6)))
        u = cols[:, j] / norms[j]
        chosen.append(u)
        cols = cols - np.outer(u, u @ cols)
    frame = np.array(chosen)
    for i in range(k):
        lead = np.flatnonzero(np.abs(frame[i]) > 1e-12)
        if lead.size and frame[i, lead[0]] < 0:
            frame[i] = -frame[i]
    return frame


@dataclass(frozen=True, eq=False)
class KPlane:
    """Affine k-plane ``{base + frame.T @ lam}`` with ``base`` the foot of the perpendicular."""

    base: np.ndarray
    frame: np.ndarray

    @classmethod
    def from_base_frame(cls, point, directions):
        frame = _canonical_frame(directions)
        point = np.asarray(point, dtype=float)
        base = point - frame.T @ (frame @ point)
        base.setflags(write=False)
        frame.setflags(write=False)
        return cls(base, frame)

    @property
    def d(self):
        return self.base.shape[0]

    @property
    def k(self):
        return self.frame.shape[0]

    @property
    def distance(self):
        """Euclidean distance from the origin."""
        return float(np.linalg.norm(self.base))

    @property
    def projector(self):
        return self.frame.T @ self.frame

    def point(self, lam):
        lam = np.asarray(lam, dtype=float)
        return self.base + lam @ self.frame

    def contains(self, x, tol=1e-10):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rel = x - self.base
        resid = rel - (rel @ self.frame.T) @ self.frame
        return bool(np.all(np.linalg.norm(resid, axis=1) <= tol * max(1.0, np.max(np.abs(x)))))

    def same_as(self, other, tol=1e-10):
        return (np.allclose(self.base, other.base, atol=tol, rtol=0)
                and np.allclose(self.projector, other.projector, atol=tol, rtol=0))

    def __repr__(self):
        return f"KPlane(base={self.base.tolist()}, frame={self.frame.tolist()})"


def simplex_volume(points):
    """k-volume of the simplex with the given k+1 vertices, sqrt(det Gram)/k!."""
    pts = np.asarray(points, dtype=float)
    k = pts.shape[0] - 1
    if k == 0:
        return 1.0
    vol = kernels.gram_volumes(np.ascontiguousarray(pts[None]))[0]
    return float(vol) / math.factorial(k)


def parallelotope_volume(points):
    """sqrt(det Gram) of the edge vectors; equals k! * simplex_volume."""
    pts = np.asarray(points, dtype=float)
    return simplex_volume(pts) * math.factorial(pts.shape[0] - 1)


def plane_from_points(points):
    """Canonical k-plane through k+1 affinely independent points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    k = pts.shape[0] - 1
    if k < 1:
        raise DegenerateSimplexError("need at least two points")
    scale = max(1.0, float(np.max(np.linalg.norm(pts - pts[0], axis=1))))
    if parallelotope_volume(pts) <= 1e-12 * scale ** k:
        raise DegenerateSimplexError("points are affinely dependent")
    return KPlane.from_base_frame(pts[0], pts[1:] - pts[0])


def plane_bracket(pi, sign="-"):
    """sqrt(1 -+ d(pi)^2); for the default '-' the plane must meet the unit ball."""
    s = _sign(sign)
    r2 = float(pi.base @ pi.base)
    if s < 0 and r2 >= 1.0:
        raise DomainError(f"plane at distance {math.sqrt(r2):.6g} does not meet the unit ball")
    return math.sqrt(1.0 + s * r2)


@dataclass(frozen=True)
class GeodesicPatch:
    """Flat parametrisation of the totally geodesic preimage of a chart plane.

    ``density(lam)`` is the Riemannian k-volume element of the lifted
    submanifold in the coordinates ``lam`` of ``plane.point``; the
    parameter domain is the ball ``|lam| < domain_radius``.
    """

    plane: KPlane
    nu: str
    density: Callable[[np.ndarray], np.ndarray]
    domain_radius: float

    def point(self, lam):
        return self.plane.point(lam)

    def ambient(self, lam):
        return chart_lift(self.plane.point(lam), self.nu)


def geodesic_patch(pi, nu):
    """Induced volume density on ``p^{-1}(pi)``.

    Restricting :func:`chart_metric` to ``x = b + F lam`` with ``b`` orthogonal
    to the orthonormal frame ``F`` gives ``F^T x = lam`` and hence

        det(F^T g F) = (1 + s|b|^2) / (1 + s|x|^2)^{k+1},

    so the density is ``<pi>_s <x>_s^{-(k+1)}`` where ``<pi>_s = sqrt(1 + s|b|^2)``.
    """
    nu = parse_nu(nu)
    s = _sign(nu)
    pb = plane_bracket(pi, nu)
    k = pi.k
    b2 = float(pi.base @ pi.base)

    def density(lam):
        lam = np.asarray(lam, dtype=float)
        r2 = b2 + np.sum(lam * lam, axis=-1)
        return pb * (1.0 + s * r2) ** (-(k + 1) / 2.0)

    radius = math.sqrt(1.0 - b2) if s < 0 else math.inf
    return GeodesicPatch(pi, nu, density, radius)


def patch_density_from_metric(pi, nu, lam):
    """sqrt(det(F g F^T)) from :func:`chart_metric`; cross-check for :func:`geodesic_patch`."""
    x = pi.point(lam)
    g = chart_metric(x, nu)
    F = pi.frame
    gi = F @ g @ F.T
    return np.sqrt(np.linalg.det(gi))


def random_rotation(d, rng, proper=False):
    """Haar-distributed element of O(d) (or SO(d) if ``proper``)."""
    z = rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    q = q * np.sign(np.diag(r))
    if proper and np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


class Quadric:
    """Solid ellipsoid ``{x : x^T A x + 2 beta.x + gamma <= 0}`` with A positive definite.

    Used as a (superset of the) support of a function: integration domains on
    planes are obtained by restricting the quadric, which gives an exact
    chord / ellipse instead of a clipped box.
    """

    def __init__(self, A, beta, gamma):
        self.A = np.asarray(A, dtype=float)
        self.beta = np.asarray(beta, dtype=float)
        self.gamma = float(gamma)
        evals = np.linalg.eigvalsh(self.A)
        if evals[0] <= 0:
            raise ValueError("quadric is not an ellipsoid (A not positive definite)")
        self.center = -np.linalg.solve(self.A, self.beta)
        self.kappa = float(self.beta @ -self.center - self.gamma)
        if self.kappa <= 0:
            raise ValueError("empty quadric")
        self._lam_min = float(evals[0])

    @classmethod
    def ball(cls, center, radius):
        c = np.asarray(center, dtype=float)
        return cls(np.eye(c.shape[0]), -c, float(c @ c) - radius * radius)

    @property
    def d(self):
        return self.A.shape[0]

    def bounding_ball(self):
        return self.center.copy(), math.sqrt(self.kappa / self._lam_min)

    @property
    def outer_radius(self):
        """max |x| over the ellipsoid."""
        return self.max_norm()

    def max_norm(self):
        """max |c + T y| over |y| <= 1, from the secular equation of the trust-region problem."""
        c, T = self.ellipsoid_map()
        s2, V = np.linalg.eigh(T.T @ T)
        g = V.T @ (T.T @ c)
        top = float(s2[-1])

        def ynorm2(mu):
            return float(np.sum(g * g / (mu - s2) ** 2))

        gscale = max(1e-300, float(np.max(np.abs(g))))
        at_top = s2 >= top * (1 - 1e-12)
        z = None
        if np.all(np.abs(g[at_top]) <= 1e-14 * gscale):
            # possible hard case: free component along the top eigenspace
            rest = ~at_top
            zr = g[rest] / (top - s2[rest])
            if float(zr @ zr) <= 1.0:
                z = np.zeros_like(g)
                z[rest] = zr
                z[np.flatnonzero(at_top)[0]] = math.sqrt(1.0 - float(zr @ zr))
        if z is None:
            lo = top
            hi = top + float(np.linalg.norm(g)) + 1.0
            while ynorm2(hi) > 1.0:
                hi = top + 2 * (hi - top)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid == lo or mid == hi:
                    break
                if ynorm2(mid) > 1.0:
                    lo = mid
                else:
                    hi = mid
            z = g / (hi - s2)
        y = V @ z
        return float(np.linalg.norm(c + T @ y))

    def ellipsoid_map(self):
        """``(c, T)`` with the ellipsoid equal to ``{c + T y : |y| <= 1}``."""
        Lc = np.linalg.cholesky(self.A)
        T = math.sqrt(self.kappa) * np.linalg.inv(Lc).T
        return self.center.copy(), T

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,ij,...j->...", x, self.A, x) + 2 * x @ self.beta + self.gamma

    def contains(self, x):
        return self.value(x) <= 0.0

    def restrict(self, base, frame):
        """Restriction to planes ``base + lam @ frame`` (batched).

        Returns ``(center, T, ok)`` with the planar ellipse written as
        ``lam = center + y @ T.T`` for ``|y| <= 1``; ``ok`` is False where the
        plane misses the ellipsoid.
        """
        base = np.atleast_2d(base)
        frame = np.asarray(frame, dtype=float)
        if frame.ndim == 2:
            frame = np.broadcast_to(frame, (base.shape[0],) + frame.shape)
        Ab = np.einsum("nkd,de,nje->nkj", frame, self.A, frame)
        bb = np.einsum("nkd,nd->nk", frame, base @ self.A + self.beta)
        gb = self.value(base)
        m = -np.linalg.solve(Ab, bb[..., None])[..., 0]
        kappa = -np.einsum("nk,nk->n", bb, m) - gb
        ok = kappa > 0
        chol = np.linalg.cholesky(Ab)
        # T = sqrt(kappa) * chol^{-T}
        kk = frame.shape[1]
        eye = np.broadcast_to(np.eye(kk), Ab.shape)
        inv_lower = np.linalg.solve(chol, eye)
        T = np.sqrt(np.clip(kappa, 0.0, None))[:, None, None] * np.transpose(inv_lower, (0, 2, 1))
        return m, T, ok

    def projective_pullback(self, H):
        """Quadric ``{x : (Hx~)/(Hx~)_last in self}`` for a homogeneous matrix H (x~ = (x, 1))."""
        d = self.d
        Qh = np.zeros((d + 1, d + 1))
        Qh[:d, :d] = self.A
        Qh[:d, d] = self.beta
        Qh[d, :d] = self.beta
        Qh[d, d] = self.gamma
        P = H.T @ Qh @ H
        return Quadric(P[:d, :d], P[:d, d], P[d, d])

    def union_ball(self, other):
        """Ball quadric containing both ellipsoids."""
        c1, r1 = self.bounding_ball()
        c2, r2 = other.bounding_ball()
        dist = float(np.linalg.norm(c2 - c1))
        if dist + r2 <= r1:
            return Quadric.ball(c1, r1)
        if dist + r1 <= r2:
            return Quadric.ball(c2, r2)
        r = 0.5 * (dist + r1 + r2)
        c = c1 + (c2 - c1) * ((r - r1) / dist)
        return Quadric.ball(c, r)

    def __repr__(self):
        c, r = self.bounding_ball()
        return f"Quadric(center={c.tolist()}, bounding_radius={r:.6g})"
