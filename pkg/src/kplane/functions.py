"""Closed-form and tabulated test functions on the chart R^d, and plane functions.

Every :class:`FunctionSpec` is a vectorised callable ``f(x)`` on arrays of
shape ``(..., d)`` together with an optional :class:`~kplane.geometry.Quadric`
``support`` that contains the set where ``f`` may be nonzero.  Functions on
the sphere or hyperboloid are represented in chart form, i.e. by
``g o p^{-1}`` on R^d (resp. the unit ball).
"""

import math

import numpy as np

from . import kernels
from .errors import PoleError, SingularMatrixError
from .geometry import Quadric, bracket, chart_lift, parse_nu, random_rotation


class FunctionSpec:
    d = None
    support = None
    radial = False

    def shape_hint(self):
        """``(center, M)`` such that ``f(center + M y)`` is roughly isotropic of unit scale in y."""
        return np.zeros(self.d), np.eye(self.d)

    def _eval(self, x):
        raise NotImplementedError

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        flat = np.ascontiguousarray(x.reshape(-1, x.shape[-1]))
        return self._eval(flat).reshape(shape)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Constant(self.d, other)
        return Sum(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Scaled(self, float(other))
        return Product(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return Scaled(self, -1.0)

    @property
    def bounded(self):
        return self.support is not None


class Constant(FunctionSpec):
    def __init__(self, d, value=1.0, support=None):
        self.d = d
        self.value = float(value)
        self.support = support
        self.radial = True

    def _eval(self, x):
        out = np.full(x.shape[0], self.value)
        if self.support is not None:
            out[~self.support.contains(x)] = 0.0
        return out

    def __repr__(self):
        return f"Constant({self.value})"


def zero(d):
    """The zero function; its (vacuous) support is declared as a small ball."""
    return Constant(d, 0.0, Quadric.ball(np.zeros(d), 0.5))


def _check_invertible(L):
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if abs(np.linalg.det(L)) <= 1e-10:
        raise SingularMatrixError("L must be invertible (|det L| > 1e-10)")
    return L


class Extremal(FunctionSpec):
    """``C (1 + |L x + x0|^2)^{-(k+1)/2}``, a member of the flat extremal family."""

    def __init__(self, C, L, x0, k):
        self.L = _check_invertible(L)
        self.d = self.L.shape[0]
        self.x0 = np.asarray(x0, dtype=float).reshape(self.d)
        self.C = float(C)
        self.k = int(k)
        self.power = (self.k + 1) / 2.0
        self.radial = bool(np.allclose(self.x0, 0) and np.allclose(self.L.T @ self.L,
                                                                  self.L[0] @ self.L[0] * np.eye(self.d)))

    @classmethod
    def h0(cls, d, k):
        return cls(1.0, np.eye(d), np.zeros(d), k)

    @property
    def params(self):
        return self.C, self.L.copy(), self.x0.copy()

    def shape_hint(self):
        Linv = np.linalg.inv(self.L)
        return -Linv @ self.x0, Linv

    def _eval(self, x):
        return kernels.extremal_values(x, self.L, self.x0, self.C, self.power)

    def __repr__(self):
        return f"Extremal(C={self.C:.6g}, L={self.L.tolist()}, x0={self.x0.tolist()}, k={self.k})"


def extremal_eval(nu, C, L, x0, point, k):
    """Evaluate a member of the extremal family E_nu at a point of the model space.

    For ``nu='0'`` the point lies in R^d; for ``'+'``/``'-'`` it is an ambient
    point zeta in R^{d+1} and the family is
    ``C (zeta_{d+1}^2 + |L zeta' + zeta_{d+1} x0|^2)^{-(k+1)/2}``.
    """
    nu = parse_nu(nu)
    L = _check_invertible(L)
    x0 = np.asarray(x0, dtype=float)
    pt = np.asarray(point, dtype=float)
    if nu == "0":
        y = pt @ L.T + x0
        return C * (1.0 + np.sum(y * y, axis=-1)) ** (-(k + 1) / 2.0)
    last = pt[..., -1:]
    y = pt[..., :-1] @ L.T + last * x0
    return C * (last[..., 0] ** 2 + np.sum(y * y, axis=-1)) ** (-(k + 1) / 2.0)


class ManifoldExtremal(FunctionSpec):
    """Chart form of a member of E_+ or E_-."""

    def __init__(self, nu, C, L, x0, k):
        self.nu = parse_nu(nu)
        if self.nu == "0":
            raise ValueError("use Extremal for the flat family")
        self.L = _check_invertible(L)
        self.d = self.L.shape[0]
        self.C, self.x0, self.k = float(C), np.asarray(x0, dtype=float), int(k)

    def _eval(self, x):
        return extremal_eval(self.nu, self.C, self.L, self.x0, chart_lift(x, self.nu), self.k)

    def shape_hint(self):
        # chart form is C <x>^{k+1} (1 + |L x - x0|^2)^{-(k+1)/2}
        Linv = np.linalg.inv(self.L)
        return Linv @ self.x0, Linv


class Bump(FunctionSpec):
    """``amp (1 - |x - c|^2 / r^2)^power`` inside the ball B(c, r), zero outside."""

    def __init__(self, center, radius, power=4, amp=1.0):
        self.center = np.asarray(center, dtype=float)
        self.d = self.center.shape[0]
        self.radius = float(radius)
        self.power = float(power)
        self.amp = float(amp)
        self.support = Quadric.ball(self.center, self.radius)
        self.radial = bool(np.allclose(self.center, 0))

    def _eval(self, x):
        return kernels.bump_values(x, self.center, self.radius, self.power, self.amp)

    def __repr__(self):
        return f"Bump(center={self.center.tolist()}, radius={self.radius}, power={self.power}, amp={self.amp})"


class Gaussian(FunctionSpec):
    """``amp exp(-|x - c|^2 / w^2)``."""

    def __init__(self, center, width, amp=1.0):
        self.center = np.asarray(center, dtype=float)
        self.d = self.center.shape[0]
        self.width = float(width)
        self.amp = float(amp)
        self.radial = bool(np.allclose(self.center, 0))

    def _eval(self, x):
        r2 = np.sum((x - self.center) ** 2, axis=-1)
        return self.amp * np.exp(-r2 / self.width ** 2)

    def shape_hint(self):
        return self.center.copy(), self.width * np.eye(self.d)


class Grid(FunctionSpec):
    """Multilinear interpolant of samples on a regular grid over ``[lo, hi]``; zero outside."""

    def __init__(self, values, lo, hi):
        self.values = np.ascontiguousarray(values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid samples must be finite")
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.d = self.lo.shape[0]
        if self.values.ndim != self.d or min(self.values.shape) < 2:
            raise ValueError("grid must have >= 2 samples along each of the d axes")
        center = 0.5 * (self.lo + self.hi)
        self.support = Quadric.ball(center, 0.5 * float(np.linalg.norm(self.hi - self.lo)))

    def _eval(self, x):
        return kernels.multilinear(self.values, self.lo, self.hi, x)


class Truncated(FunctionSpec):
    """``f * 1_{B(center, radius)}``."""

    def __init__(self, f, radius, center=None):
        self.f = f
        self.d = f.d
        self.center = np.zeros(self.d) if center is None else np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.support = Quadric.ball(self.center, self.radius)
        self.radial = f.radial and bool(np.allclose(self.center, 0))

    def shape_hint(self):
        return self.f.shape_hint()

    def _eval(self, x):
        out = self.f._eval(x)
        outside = np.sum((x - self.center) ** 2, axis=-1) > self.radius ** 2
        out[outside] = 0.0
        return out

    def __repr__(self):
        return f"Truncated({self.f!r}, radius={self.radius})"


class Scaled(FunctionSpec):
    def __init__(self, f, c):
        self.f, self.c = f, float(c)
        self.d, self.support, self.radial = f.d, f.support, f.radial

    def shape_hint(self):
        return self.f.shape_hint()

    def _eval(self, x):
        return self.c * self.f._eval(x)

    def __repr__(self):
        return f"{self.c!r}*{self.f!r}"


class Sum(FunctionSpec):
    def __init__(self, f, g):
        self.f, self.g = f, g
        self.d = f.d
        if f.support is None or g.support is None:
            self.support = None
        else:
            self.support = f.support.union_ball(g.support)
        self.radial = f.radial and g.radial

    def shape_hint(self):
        return self.f.shape_hint()

    def _eval(self, x):
        return self.f._eval(x) + self.g._eval(x)

    def __repr__(self):
        return f"({self.f!r} + {self.g!r})"


class Product(FunctionSpec):
    def __init__(self, f, g):
        self.f, self.g = f, g
        self.d = f.d
        cands = [s for s in (f.support, g.support) if s is not None]
        self.support = min(cands, key=lambda s: s.bounding_ball()[1]) if cands else None
        self.radial = f.radial and g.radial

    def shape_hint(self):
        return self.f.shape_hint()

    def _eval(self, x):
        return self.f._eval(x) * self.g._eval(x)

    def __repr__(self):
        return f"({self.f!r} * {self.g!r})"


class Rotated(FunctionSpec):
    """``f(R^T x)``: f transported by the orthogonal map R."""

    def __init__(self, f, R):
        self.f = f
        self.R = np.asarray(R, dtype=float)
        self.d = f.d
        self.radial = f.radial
        s = f.support
        self.support = None if s is None else Quadric(self.R @ s.A @ self.R.T, self.R @ s.beta, s.gamma)

    def shape_hint(self):
        c, M = self.f.shape_hint()
        return self.R @ c, self.R @ M

    def _eval(self, x):
        return self.f._eval(np.ascontiguousarray(x @ self.R))


class Lifted(FunctionSpec):
    """Chart form of the lift ``P_+- f``: ``x -> <x>_+-^{k+1} f(x)``."""

    def __init__(self, f, sign, k):
        self.f = f
        self.sign = parse_nu(sign)
        self.k = int(k)
        self.d = f.d
        self.support = f.support
        self.radial = f.radial

    def shape_hint(self):
        return self.f.shape_hint()

    def _eval(self, x):
        return bracket(x, self.sign) ** (self.k + 1) * self.f._eval(x)

    def __repr__(self):
        return f"P{self.sign}[{self.f!r}]"


class Unlifted(FunctionSpec):
    """Inverse of :class:`Lifted`: ``x -> <x>_+-^{-(k+1)} g(x)``."""

    def __init__(self, g, sign, k):
        self.g = g
        self.sign = parse_nu(sign)
        self.k = int(k)
        self.d = g.d
        self.support = g.support
        self.radial = g.radial

    def shape_hint(self):
        return self.g.shape_hint()

    def _eval(self, x):
        return bracket(x, self.sign) ** (-(self.k + 1)) * self.g._eval(x)


def boost_homogeneous(a, b, d):
    """Homogeneous (d+1)x(d+1) matrix of the chart map x -> (x', a x_d + b)/(b x_d + a)."""
    H = np.eye(d + 1)
    H[d - 1, d - 1] = a
    H[d - 1, d] = b
    H[d, d - 1] = b
    H[d, d] = a
    return H


def _boost_chart_apply(a, b, x):
    """Chart map induced by the pure boost (a, b)."""
    x = np.asarray(x, dtype=float)
    den = b * x[..., -1] + a
    if np.any(np.abs(den) < 1e-14):
        raise PoleError("point on the pole hyperplane b*x_d + a = 0")
    out = np.array(x, dtype=float, copy=True)
    out[..., :-1] = x[..., :-1] / den[..., None]
    out[..., -1] = (a * x[..., -1] + b) / den
    return out


class ChartPullback(FunctionSpec):
    """``|b x_d + a|^{-power} f(Phi(x))`` for the chart map Phi of a pure boost.

    ``power = k+1`` is the L^p isometry S of the transfer; ``power = 0`` is the
    plain pullback L^* g in chart form.
    """

    def __init__(self, f, a, b, power):
        self.f = f
        self.a, self.b = float(a), float(b)
        self.power = float(power)
        self.d = f.d
        self.radial = False
        self.support = None
        if f.support is not None:
            H = boost_homogeneous(self.a, self.b, self.d)
            self.support = f.support.projective_pullback(H)

    def _eval(self, x):
        den = self.b * x[:, -1] + self.a
        if np.any(np.abs(den) < 1e-14):
            raise PoleError("evaluation on the pole hyperplane b*x_d + a = 0")
        y = _boost_chart_apply(self.a, self.b, x)
        out = self.f._eval(np.ascontiguousarray(y))
        if self.power:
            out = out * np.abs(den) ** (-self.power)
        return out


# ---------------------------------------------------------------------------
# functions on affine plane space, evaluated on batches (base, frame)


class PlaneFunctionSpec:
    support = None  # (center, radius): the function vanishes on planes missing this ball

    def __call__(self, base, frame):
        raise NotImplementedError


def line_angle_offset(base, frame):
    """(theta in [0, pi), signed offset t) of lines {x . n(theta) = t} in R^2."""
    f = frame[:, 0, :]
    n = np.stack([-f[:, 1], f[:, 0]], axis=1)
    theta = np.arctan2(n[:, 1], n[:, 0])
    t = np.sum(base * n, axis=1)
    flip = theta < 0
    theta = np.where(flip, theta + np.pi, theta)
    t = np.where(flip, -t, t)
    wrap = theta >= np.pi
    theta = np.where(wrap, theta - np.pi, theta)
    t = np.where(wrap, -t, t)
    return theta, t


def line_from_angle_offset(theta, t):
    """Inverse of :func:`line_angle_offset` (base, frame) arrays."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    base = t[:, None] * n
    frame = np.stack([-n[:, 1], n[:, 0]], axis=1)[:, None, :]
    return base, frame


class AngleOffsetBump(PlaneFunctionSpec):
    """Polynomial bump in the (theta, t) coordinates of lines in R^2."""

    def __init__(self, theta_c, t_c, w_theta, w_t, power=4, amp=1.0):
        if not 0 < w_theta < np.pi / 2:
            raise ValueError("angular width must lie in (0, pi/2)")
        self.theta_c, self.t_c = float(theta_c), float(t_c)
        self.w_theta, self.w_t = float(w_theta), float(w_t)
        self.power, self.amp = float(power), float(amp)
        self.support = (np.zeros(2), abs(self.t_c) + self.w_t)

    def __call__(self, base, frame):
        theta, t = line_angle_offset(base, frame)
        # the line (theta, t) is also (theta + pi, -t); use the representative near theta_c
        dth = np.mod(theta - self.theta_c + np.pi, 2 * np.pi) - np.pi
        alt = np.abs(dth) > np.pi / 2
        dth = np.where(alt, np.mod(dth + 2 * np.pi, 2 * np.pi) - np.pi, dth)
        t = np.where(alt, -t, t)
        r2 = (dth / self.w_theta) ** 2 + ((t - self.t_c) / self.w_t) ** 2
        return np.where(r2 < 1.0, self.amp * np.clip(1.0 - r2, 0.0, None) ** self.power, 0.0)


class FootBump(PlaneFunctionSpec):
    """Polynomial bump in the foot of the perpendicular of the plane (any d, k)."""

    def __init__(self, center, radius, power=4, amp=1.0):
        self.center = np.asarray(center, dtype=float)
        self.radius, self.power, self.amp = float(radius), float(power), float(amp)
        self.support = (self.center, self.radius)

    def __call__(self, base, frame):
        r2 = np.sum((base - self.center) ** 2, axis=1) / self.radius ** 2
        return np.where(r2 < 1.0, self.amp * np.clip(1.0 - r2, 0.0, None) ** self.power, 0.0)


class DistanceIndicator(PlaneFunctionSpec):
    """Indicator of planes at distance <= tau from the origin."""

    def __init__(self, tau, d=2):
        self.tau = float(tau)
        self.support = (np.zeros(d), self.tau)

    def __call__(self, base, frame):
        return (np.sum(base * base, axis=1) <= self.tau ** 2).astype(float)


class PlaneZero(PlaneFunctionSpec):
    def __init__(self, d=2):
        self.support = (np.zeros(d), 0.5)

    def __call__(self, base, frame):
        return np.zeros(base.shape[0])


def lp_distance_params(C, L, x0):
    """Flatten family parameters (C, L, x0) into one vector."""
    return np.concatenate([[C], np.ravel(L), np.ravel(x0)])


def unpack_params(theta, d):
    C = float(theta[0])
    L = np.asarray(theta[1:1 + d * d]).reshape(d, d)
    x0 = np.asarray(theta[1 + d * d:1 + d * d + d])
    return C, L, x0


def is_numerically_radial(f, rng=None, trials=4, n=32, radius=0.9, tol=1e-9):
    """Check f(Omega x) = f(x) for random rotations Omega at random points."""
    rng = np.random.default_rng(0) if rng is None else rng
    x = rng.uniform(-radius, radius, (n, f.d)) / math.sqrt(f.d)
    fx = f(x)
    scale = max(1.0, float(np.max(np.abs(fx))))
    for _ in range(trials):
        R = random_rotation(f.d, rng)
        if np.max(np.abs(f(x @ R.T) - fx)) > tol * scale:
            return False
    return True
