"""Minkowski algebra on R^{d+1}: reflections, pure boosts, induced chart maps
and factorisations of O(d,1) into -Id, rotations and boosts.

Conventions: the form is ``<u,v> = u_1 v_1 + ... + u_d v_d - u_{d+1} v_{d+1}``
and a pure boost with parameters ``(a, b)``, ``a^2 - b^2 = 1``, acts by the
block ``[[a, -b], [-b, a]]`` on ``(x_d, x_{d+1})``.  A Lorentz map ``L``
induces the projective chart map ``Phi = p o L o p^{-1}`` whose homogeneous
matrix is ``D L D`` with ``D = diag(-1, ..., -1, 1)``.
"""

from dataclasses import dataclass
import json
import math

import numpy as np

from .errors import ConstraintError, InvalidLorentzError, NullAxisError, PoleError
from .functions import ChartPullback
from .geometry import KPlane, plane_bracket, plane_from_points, random_rotation, simplex_volume

POLE_TOL = 1e-14


def minkowski_form(n):
    J = np.eye(n + 1)
    J[n, n] = -1.0
    return J


def minkowski(u, v):
    """Minkowski product, batched over leading axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.sum(u[..., :-1] * v[..., :-1], axis=-1) - u[..., -1] * v[..., -1]


@dataclass(frozen=True, eq=False)
class LorentzMap:
    """Element of O(d,1) given by its (d+1)x(d+1) matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        M = np.array(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 2:
            raise InvalidLorentzError("Lorentz map must be a square matrix of size >= 2")
        if not np.all(np.isfinite(M)):
            raise InvalidLorentzError("Lorentz matrix has non-finite entries")
        J = minkowski_form(M.shape[0] - 1)
        resid = np.max(np.abs(M.T @ J @ M - J))
        if resid > 1e-10 * max(1.0, float(np.max(np.abs(M))) ** 2):
            raise InvalidLorentzError(f"M^T J M != J (residual {resid:.3g})")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def d(self):
        return self.matrix.shape[0] - 1

    def __matmul__(self, other):
        if isinstance(other, LorentzMap):
            return LorentzMap(self.matrix @ other.matrix)
        return self.matrix @ np.asarray(other, dtype=float)

    def inverse(self):
        J = minkowski_form(self.d)
        return LorentzMap(J @ self.matrix.T @ J)

    @property
    def homogeneous(self):
        """Matrix of the induced projective chart map acting on (x, 1)."""
        D = np.ones(self.d + 1)
        D[:-1] = -1.0
        return D[:, None] * self.matrix * D[None, :]


def reflection(n):
    """Minkowski reflection ``v -> v - 2 <v,n>/<n,n> n``."""
    n = np.asarray(n, dtype=float)
    nn = float(minkowski(n, n))
    if abs(nn) < 1e-12:
        raise NullAxisError(f"reflection axis is null (<n,n> = {nn:.3g})")
    J = minkowski_form(n.shape[0] - 1)
    return LorentzMap(np.eye(n.shape[0]) - (2.0 / nn) * np.outer(n, J @ n))


@dataclass(frozen=True)
class PureBoost:
    """Boost ``[[a, -b], [-b, a]]`` on the last spatial and the time coordinate."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ConstraintError("boost parameters must be finite")
        if abs(a * a - b * b - 1.0) > 1e-12 * max(1.0, a * a):
            raise ConstraintError(f"a^2 - b^2 = {a * a - b * b!r}, expected 1")
        if a <= 0:
            raise ConstraintError("boost must have a > 0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_rapidity(cls, t):
        return cls(math.cosh(t), math.sinh(t))

    @property
    def rapidity(self):
        return math.asinh(self.b)

    def inverse(self):
        return PureBoost(self.a, -self.b)

    def compose(self, other):
        """Parameters of ``self.matrix @ other.matrix``."""
        return PureBoost(self.a * other.a + self.b * other.b, self.a * other.b + self.b * other.a)

    def matrix(self, d):
        M = np.eye(d + 1)
        M[d - 1, d - 1] = M[d, d] = self.a
        M[d - 1, d] = M[d, d - 1] = -self.b
        return M

    def lorentz(self, d):
        return LorentzMap(self.matrix(d))

    @property
    def is_identity(self):
        return self.b == 0.0


def pure_boost(a, b, d):
    """LorentzMap of the pure boost (a, b) in dimension d."""
    return PureBoost(a, b).lorentz(d)


# ---------------------------------------------------------------------------
# induced chart maps


class ChartMap:
    """Projective self-map ``Phi = p o L o p^{-1}`` of the chart.

    ``Phi(x) = (H x~)' / (H x~)_{d+1}`` with ``x~ = (x, 1)`` and ``H`` the
    homogeneous matrix of L; since ``|det H| = 1`` the Jacobian is
    ``|(H x~)_{d+1}|^{-(d+1)}``.
    """

    def __init__(self, source, boost=None):
        self.source = source if isinstance(source, LorentzMap) else LorentzMap(source)
        self.boost = boost
        self.H = self.source.homogeneous

    @property
    def d(self):
        return self.source.d

    def denominator(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.H[-1, :-1] + self.H[-1, -1]

    def _checked_den(self, x):
        den = self.denominator(x)
        if np.any(np.abs(den) < POLE_TOL):
            raise PoleError("point on the pole hyperplane of the chart map")
        return den

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        den = self._checked_den(x)
        num = x @ self.H[:-1, :-1].T + self.H[:-1, -1]
        return num / np.asarray(den)[..., None]

    __call__ = apply

    def jacobian(self, x):
        den = self._checked_den(x)
        return np.abs(den) ** (-(self.d + 1))

    def compose(self, other):
        boost = None
        if self.boost is not None and other.boost is not None:
            boost = self.boost.compose(other.boost)
        return ChartMap(self.source @ other.source, boost)

    def map_plane(self, pi):
        """Image plane ``Phi(pi)``, computed projectively (needs no finite image point on the plane)."""
        d, k = pi.d, pi.k
        gens = np.zeros((k + 1, d + 1))
        gens[0, :d] = pi.base
        gens[0, d] = 1.0
        gens[1:, :d] = pi.frame
        V = gens @ self.H.T
        last = V[:, d]
        if np.linalg.norm(last) < POLE_TOL:
            raise PoleError("plane is mapped entirely to infinity")
        c = last / float(last @ last)
        point = (c @ V)[:d]
        # directions: combinations with zero last coordinate
        _, _, vt = np.linalg.svd(last[None, :])
        dirs = vt[1:] @ V[:, :d]
        return KPlane.from_base_frame(point, dirs)

    def map_planes(self, base, frame):
        """Batched :meth:`map_plane` for arrays ``base (N, d)``, ``frame (N, k, d)``."""
        N, k, d = frame.shape
        gens = np.zeros((N, k + 1, d + 1))
        gens[:, 0, :d] = base
        gens[:, 0, d] = 1.0
        gens[:, 1:, :d] = frame
        V = gens @ self.H.T
        last = V[:, :, d]
        nl = np.sum(last * last, axis=1)
        if np.any(nl < POLE_TOL ** 2):
            raise PoleError("plane is mapped entirely to infinity")
        point = np.einsum("nj,njd->nd", last / nl[:, None], V[:, :, :d])
        # Householder complement of the last-coordinate vector
        u = last / np.sqrt(nl)[:, None]
        e = np.zeros(k + 1)
        e[0] = 1.0
        w = u - e
        nw = np.linalg.norm(w, axis=1)
        small = nw < 1e-12
        w[small] = 0.0
        w[~small] /= nw[~small, None]
        Hh = np.eye(k + 1)[None] - 2 * w[:, :, None] * w[:, None, :]
        dirs = np.einsum("nij,njd->nid", np.transpose(Hh[:, :, 1:], (0, 2, 1)), V[:, :, :d])
        # orthonormalise directions and project the point to the foot of the perpendicular
        qm, _ = np.linalg.qr(np.transpose(dirs, (0, 2, 1)))
        fr = np.transpose(qm, (0, 2, 1))
        new_base = point - np.einsum("nkd,nk->nd", fr, np.einsum("nkd,nd->nk", fr, point))
        return new_base, fr


def induced_map(B, d):
    """Chart map of the pure boost ``B`` (a PureBoost or an (a, b) pair)."""
    if not isinstance(B, PureBoost):
        B = PureBoost(*B)
    return ChartMap(B.lorentz(d), B)


def phi_apply(phi, x):
    return phi.apply(x)


def phi_jacobian(phi, x):
    return phi.jacobian(x)


def pullback_isometry(f, B, k):
    """``S f(x) = |b x_d + a|^{-(k+1)} f(Phi(x))``, the L^p isometry attached to B."""
    if not isinstance(B, PureBoost):
        B = PureBoost(*B)
    return ChartPullback(f, B.a, B.b, k + 1)


def bracket_ratio_sides(points, B):
    """Both sides of the bracket / simplex-volume identity for the boost B.

    Returns ``(<pi>_-/<Phi(pi)>_-, prod|b x_{i,d} + a| Det(Phi(x_i)) / Det(x_i))``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    phi = induced_map(B, pts.shape[1])
    pi = plane_from_points(pts)
    img = phi.apply(pts)
    pi_img = plane_from_points(img)
    lhs = plane_bracket(pi, "-") / plane_bracket(pi_img, "-")
    den = np.abs(phi.denominator(pts))
    rhs = float(np.prod(den)) * simplex_volume(img) / simplex_volume(pts)
    return lhs, rhs


# ---------------------------------------------------------------------------
# factorisations

FACTOR_TYPES = ("neg_identity", "rotation", "boost")


def _rotation_block(R):
    R = np.asarray(R, dtype=float)
    M = np.eye(R.shape[0] + 1)
    M[:-1, :-1] = R
    return M


@dataclass(frozen=True)
class Factor:
    kind: str
    data: object = None

    def matrix(self, d):
        if self.kind == "neg_identity":
            return -np.eye(d + 1)
        if self.kind == "rotation":
            return _rotation_block(self.data)
        if self.kind == "boost":
            return self.data.matrix(d)
        raise ValueError(f"unknown factor type {self.kind!r}")

    def to_json(self):
        if self.kind == "neg_identity":
            return {"type": "neg_identity", "data": None}
        if self.kind == "rotation":
            return {"type": "rotation", "data": np.asarray(self.data).tolist()}
        return {"type": "boost", "data": [self.data.a, self.data.b]}

    @classmethod
    def from_json(cls, obj):
        kind = obj["type"]
        if kind == "neg_identity":
            return cls(kind)
        if kind == "rotation":
            return cls(kind, np.asarray(obj["data"], dtype=float))
        if kind == "boost":
            return cls(kind, PureBoost(*obj["data"]))
        raise ValueError(f"unknown factor type {kind!r}")


class FactorList:
    """Ordered factors whose matrix product (left to right) is a Lorentz map."""

    def __init__(self, d, factors=()):
        self.d = int(d)
        self.factors = list(factors)

    def __iter__(self):
        return iter(self.factors)

    def __len__(self):
        return len(self.factors)

    def __add__(self, other):
        return FactorList(self.d, self.factors + list(other.factors))

    def counts(self):
        out = {t: 0 for t in FACTOR_TYPES}
        for f in self.factors:
            out[f.kind] += 1
        return out

    def product(self):
        M = np.eye(self.d + 1)
        for f in self.factors:
            M = M @ f.matrix(self.d)
        return M

    def inverse(self):
        inv = []
        for f in reversed(self.factors):
            if f.kind == "rotation":
                inv.append(Factor("rotation", np.asarray(f.data).T))
            elif f.kind == "boost":
                inv.append(Factor("boost", f.data.inverse()))
            else:
                inv.append(f)
        return FactorList(self.d, inv)

    def validate(self, orth_tol=1e-12, boost_tol=1e-12):
        """Raise if some factor is not of its declared form."""
        for f in self.factors:
            if f.kind == "rotation":
                R = np.asarray(f.data)
                if R.shape != (self.d, self.d):
                    raise InvalidLorentzError("rotation factor has the wrong shape")
                if np.max(np.abs(R.T @ R - np.eye(self.d))) > orth_tol:
                    raise InvalidLorentzError("rotation factor is not orthogonal")
            elif f.kind == "boost":
                a, b = f.data.a, f.data.b
                if abs(a * a - b * b - 1.0) > boost_tol * max(1.0, a * a) or a <= 0:
                    raise InvalidLorentzError("boost factor violates a^2 - b^2 = 1, a > 0")
            elif f.kind != "neg_identity":
                raise InvalidLorentzError(f"unknown factor type {f.kind!r}")
        return True

    def to_json(self):
        return [f.to_json() for f in self.factors]

    def dumps(self, **kw):
        return json.dumps({"d": self.d, "factors": self.to_json()}, **kw)

    @classmethod
    def from_json(cls, obj, d=None):
        if isinstance(obj, dict):
            d = obj.get("d", d)
            obj = obj["factors"]
        factors = [Factor.from_json(o) for o in obj]
        if d is None:
            for f in factors:
                if f.kind == "rotation":
                    d = np.asarray(f.data).shape[0]
                    break
        if d is None:
            raise ValueError("cannot infer d from the factor list")
        return cls(d, factors)

    def simplified(self):
        """Drop identity rotations/boosts and cancel adjacent -Id pairs."""
        out = []
        for f in self.factors:
            if f.kind == "rotation" and np.array_equal(f.data, np.eye(self.d)):
                continue
            if f.kind == "boost" and f.data.b == 0.0:
                continue
            if f.kind == "neg_identity" and out and out[-1].kind == "neg_identity":
                out.pop()
                continue
            out.append(f)
        return FactorList(self.d, out)


def _householder_to(u, target_index):
    """Orthogonal reflection mapping the unit vector u to e_target (identity if already there)."""
    d = u.shape[0]
    e = np.zeros(d)
    e[target_index] = 1.0
    w = u - e
    nw = np.linalg.norm(w)
    if nw < 1e-15:
        return np.eye(d)
    w /= nw
    return np.eye(d) - 2.0 * np.outer(w, w)


def _last_coordinate_reflection(d):
    """diag(1,...,1,-1) as (-Id_{d+1}) . rotation(-Id_d)."""
    return [Factor("neg_identity"), Factor("rotation", -np.eye(d))]


def decompose_reflection(n):
    """Factor the reflection ``R_n`` into -Id, rotations and boosts.

    Timelike axes: ``R_n = Om^{-1} B^{-1} R_{e_{d+1}} B Om`` where the rotation
    Om sends the spatial part of n onto the e_d axis and the boost B sends
    ``Om n`` onto the e_{d+1} axis.  Spacelike axes use the same conjugation
    with ``R_{e_d}``, which is itself a rotation.
    """
    n = np.asarray(n, dtype=float)
    d = n.shape[0] - 1
    nn = float(minkowski(n, n))
    if abs(nn) < 1e-12:
        raise NullAxisError(f"reflection axis is null (<n,n> = {nn:.3g})")
    n = n / math.sqrt(abs(nn))
    if nn < 0 and n[-1] < 0:
        n = -n  # same reflection
    ns, c = n[:-1], float(n[-1])
    s = float(np.linalg.norm(ns))
    Om = _householder_to(ns / s, d - 1) if s > 0 else np.eye(d)
    # Om n = (0, ..., 0, s, c)
    if nn < 0:
        B = PureBoost(c, s)  # c^2 - s^2 = 1, B Om n = e_{d+1}
        middle = _last_coordinate_reflection(d)
    else:
        B = PureBoost(s, c)  # s^2 - c^2 = 1, B Om n = e_d
        Rd = np.eye(d)
        Rd[d - 1, d - 1] = -1.0
        middle = [Factor("rotation", Rd)]
    factors = [
        Factor("rotation", Om.T),
        Factor("boost", B.inverse()),
        *middle,
        Factor("boost", B),
        Factor("rotation", Om),
    ]
    return FactorList(d, factors).simplified()


def _reflection_axes(M, null_tol=1e-6):
    """Axes n_1, n_2, ... with ``... R_{n_2} R_{n_1} M = Id`` (Cartan-Dieudonne sweep).

    Columns are treated in the order e_{d+1}, e_1, ..., e_d; each uses
    ``n = M e_i - e_i`` unless that axis is nearly null, in which case the
    pair ``n = M e_i + e_i`` followed by ``e_i`` is used.
    """
    d = M.shape[0] - 1
    M = M.copy()
    axes = []
    J = minkowski_form(d)
    for i in [d] + list(range(d)):
        e = np.zeros(d + 1)
        e[i] = 1.0
        v = M[:, i]
        if np.max(np.abs(v - e)) < 1e-15:
            continue
        cand = [v - e]
        nn = float(minkowski(cand[0], cand[0]))
        if abs(nn) < null_tol:
            cand = [v + e, e]
        for n in cand:
            nn = float(minkowski(n, n))
            R = np.eye(d + 1) - (2.0 / nn) * np.outer(n, J @ n)
            M = R @ M
            axes.append(n)
    return axes, M


def decompose_lorentz(L, method="polar"):
    """Factor a Lorentz map into -Id, rotations of R^d and pure boosts.

    ``method="polar"`` gives the short form ``(-Id)^s Om_1 B Om_2``.
    ``method="reflections"`` writes L as a product of at most d+1 reflection
    stages and expands each stage through :func:`decompose_reflection`.
    """
    if not isinstance(L, LorentzMap):
        L = LorentzMap(L)
    d = L.d
    M = np.array(L.matrix)
    if method == "polar":
        factors = []
        if M[d, d] < 0:
            factors.append(Factor("neg_identity"))
            M = -M
        v = M[:, d]
        a = float(v[d])
        vs = v[:d]
        r = float(np.linalg.norm(vs))
        if r < 1e-15:
            Om1 = np.eye(d)
            B = PureBoost(1.0, 0.0)
        else:
            sgn = 1.0 if vs[d - 1] >= 0 else -1.0
            # B e_{d+1} = (0, -b, a); choose b so that Om1 e_d = -vs/b
            b = -sgn * r
            Om1 = _householder_to(-vs / b, d - 1)
            B = PureBoost(math.sqrt(1.0 + b * b), b)
        rest = B.inverse().matrix(d) @ _rotation_block(Om1.T) @ M
        # rest fixes e_{d+1}; project its spatial block back onto O(d)
        U, _, Vt = np.linalg.svd(rest[:d, :d])
        Om2 = U @ Vt
        factors += [Factor("rotation", Om1), Factor("boost", B), Factor("rotation", Om2)]
        return FactorList(d, factors).simplified()
    if method == "reflections":
        axes, _ = _reflection_axes(M)
        out = FactorList(d)
        for n in axes:
            out = out + decompose_reflection(n)
        return out.simplified()
    raise ValueError(f"unknown decomposition method {method!r}")


def random_lorentz(d, rng, max_rapidity=2.0, time_reversal=True):
    """Random element ``(-Id)^s Om_1 B Om_2`` of O(d,1)."""
    B = PureBoost.from_rapidity(rng.uniform(-max_rapidity, max_rapidity))
    M = _rotation_block(random_rotation(d, rng)) @ B.matrix(d) @ _rotation_block(random_rotation(d, rng))
    if time_reversal and rng.random() < 0.5:
        M = -M
    return LorentzMap(M)


__all__ = [
    "minkowski", "reflection", "pure_boost", "PureBoost", "LorentzMap", "ChartMap",
    "induced_map", "phi_apply", "phi_jacobian", "pullback_isometry", "bracket_ratio_sides",
    "Factor", "FactorList", "decompose_reflection", "decompose_lorentz", "random_lorentz",
]
