"""Verification suites shared by the command line and the test-suite.

Every suite returns rows ``[identity, params, lhs, rhs, stderr_lhs,
stderr_rhs, pass]`` (see :data:`kplane.records.IDENTITY_COLUMNS`).  Exact
identities carry zero errors and pass on a relative tolerance recorded in
``params``; quadrature and Monte Carlo identities pass when the sides agree
within three combined standard errors.
"""

from dataclasses import replace
import math

import numpy as np

from .errors import SupportError
from .extremals import closed_form_constants, h0, sharp_constants
from .functions import (
    AngleOffsetBump, Bump, ChartPullback, DistanceIndicator, FootBump, Gaussian, Lifted, Truncated,
)
from .geometry import Dims, KPlane, simplex_volume
from .lorentz import (
    PureBoost, bracket_ratio_sides, decompose_lorentz, induced_map, pullback_isometry,
    random_lorentz,
)
from .quadrature import Quadrature, agree
from .transform import (
    DRURY_CALIBRATION, det_relation_sides, drury_sides, equivariance_sides, invariance_sides,
    lp_norm, transfer_sides,
)

JACOBIAN_TOL = 1e-6
BRACKET_TOL = 1e-10
ISOMETRY_TOL = 1e-3
RECONSTRUCTION_TOL = 1e-10


def rel_row(name, params, lhs, rhs, tol):
    ok = abs(lhs - rhs) <= tol * max(abs(lhs), abs(rhs))
    return [name, f"{params};rel_tol={tol:g}", float(lhs), float(rhs), 0.0, 0.0, bool(ok)]


def est_row(name, params, lhs, rhs):
    return [name, params, lhs.value, rhs.value, lhs.stderr, rhs.stderr, agree(lhs, rhs, 3.0)]


def all_passed(rows):
    return all(bool(r[-1]) for r in rows)


def failures(rows):
    return [r for r in rows if not r[-1]]


# ---------------------------------------------------------------------------
# random configurations


def random_boost(rng, bmax=2.0):
    b = float(rng.uniform(-bmax, bmax))
    return PureBoost(math.sqrt(1.0 + b * b), b)


def random_ball_points(rng, n, d, rmax=0.9):
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return g * (rmax * rng.random(n) ** (1.0 / d))[:, None]


def random_plane_through(rng, point, k):
    d = len(point)
    dirs = rng.standard_normal((k, d))
    return KPlane.from_base_frame(point, dirs)


def random_bump(rng, d, reach=0.85):
    """Polynomial bump whose support stays inside the ball of radius ``reach``."""
    r = float(rng.uniform(0.2, 0.45))
    c = random_ball_points(rng, 1, d, reach - r)[0]
    return Bump(c, r, power=float(rng.integers(2, 6)))


def ball_test_functions(d, k, rng, n=5):
    """Ball-supported test functions: bumps, a truncated extremal and a sum."""
    out = [Truncated(h0(d, k), 0.95), Truncated(Gaussian(np.zeros(d), 0.4), 0.9)]
    while len(out) < n:
        out.append(random_bump(rng, d))
    out[-1] = out[-1] + 0.5 * random_bump(rng, d)
    return out[:n]


# ---------------------------------------------------------------------------
# chart maps of boosts


def fd_jacobian_det(phi, x, h=1e-6):
    """Central-difference Jacobian determinant of the chart map at x."""
    d = len(x)
    J = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        J[:, j] = (phi.apply(x + e) - phi.apply(x - e)) / (2 * h)
    return abs(np.linalg.det(J))


def jacobian_rows(d, rng, n=100, bmax=2.0):
    rows = []
    for x in random_ball_points(rng, n, d):
        B = random_boost(rng, bmax)
        phi = induced_map(B, d)
        rows.append(rel_row("jacobian", f"d={d};b={B.b:.17g}", float(phi.jacobian(x)),
                            fd_jacobian_det(phi, x), JACOBIAN_TOL))
    return rows


def bracket_rows(d, k, rng, n=1000, bmax=2.0, min_volume=1e-3):
    rows = []
    while len(rows) < n:
        pts = random_ball_points(rng, k + 1, d)
        if simplex_volume(pts) < min_volume:
            continue
        B = random_boost(rng, bmax)
        lhs, rhs = bracket_ratio_sides(pts, B)
        rows.append(rel_row("bracket_ratio", f"d={d};k={k};b={B.b:.17g}", lhs, rhs, BRACKET_TOL))
    return rows


def isometry_rows(d, k, rng, quad, n=5, bmax=1.0):
    """``|S f|_p = |f|_p`` for the pullback isometry attached to a boost."""
    p = Dims(d, k).p
    rows = []
    for _ in range(n):
        f = random_bump(rng, d)
        B = random_boost(rng, bmax)
        lhs = lp_norm(pullback_isometry(f, B, k), "0", p, quad)
        rhs = lp_norm(f, "0", p, quad)
        rows.append(est_row("pullback_isometry", f"d={d};k={k};b={B.b:.17g}", lhs, rhs))
    return rows


def chart_map_suite(d, k, seed, quad=None, n_jacobian=100, n_bracket=1000, n_isometry=5):
    quad = quad or Quadrature()
    rng = np.random.default_rng([seed, 1])
    return (jacobian_rows(d, rng, n_jacobian) + bracket_rows(d, k, rng, n_bracket)
            + isometry_rows(d, k, rng, quad, n_isometry))


# ---------------------------------------------------------------------------
# transforms


def transfer_rows(d, k, rng, quad, n):
    rows = []
    for _ in range(n):
        f = random_bump(rng, d)
        c, r = f.support.bounding_ball()
        point = c + random_ball_points(rng, 1, d, 0.8 * r)[0]
        rows.append(transfer_sides(f, random_plane_through(rng, point, k), quad).row())
    return rows


def norm_transfer_rows(d, k, rng, quad, n=5):
    """``|P_- f|_p`` (geodesic polar route on the hyperbolic space) against ``|f|_p``."""
    p = Dims(d, k).p
    rows = []
    for i, f in enumerate(ball_test_functions(d, k, rng, n)):
        lhs = lp_norm(Lifted(f, "-", k), "-", p, quad, method="polar").value
        rhs = lp_norm(f, "0", p, quad).value
        rows.append(rel_row("norm_transfer", f"d={d};k={k};f={i}", lhs, rhs, ISOMETRY_TOL))
    return rows


def det_relation_rows(d, k, rng, quad, n=20, min_volume=1e-2):
    rows = []
    while len(rows) < n:
        pts = rng.uniform(-1.0, 1.0, (k + 1, d))
        if simplex_volume(pts) < min_volume:
            continue
        f = Gaussian(rng.uniform(-0.5, 0.5, d), float(rng.uniform(0.3, 1.0)))
        lhs, rhs = det_relation_sides(f, pts, quad)
        rows.append(est_row("det_relation", f"d={d};k={k}", lhs, rhs))
    return rows


def default_plane_count(d, k):
    return 50 if (d, k) == (2, 1) else 20


def transfer_suite(d, k, seed, quad=None, n_planes=None):
    quad = quad or Quadrature()
    rng = np.random.default_rng([seed, 2])
    n = n_planes or default_plane_count(d, k)
    return (transfer_rows(d, k, rng, quad, n) + norm_transfer_rows(d, k, rng, quad)
            + det_relation_rows(d, k, rng, quad))


def equivariance_rows(d, k, rng, quad, n=50, max_rapidity=1.0):
    """Random (g, B, pi) triples; triples whose planes miss the support are redrawn."""
    rows = []
    while len(rows) < n:
        g = random_bump(rng, d)
        B = PureBoost.from_rapidity(rng.uniform(-max_rapidity, max_rapidity))
        pulled = ChartPullback(g, B.a, B.b, 0)
        c, r = pulled.support.bounding_ball()
        point = c + random_ball_points(rng, 1, d, 0.3 * r)[0]
        try:
            s = equivariance_sides(g, B, random_plane_through(rng, point, k), quad)
        except SupportError:
            continue
        rows.append(s.row())
    return rows


def invariance_functions(d):
    if d == 2:
        return [AngleOffsetBump(0.7, 0.2, 0.5, 0.3), FootBump([0.2, -0.1], 0.5),
                DistanceIndicator(0.6)]
    return [FootBump(np.full(d, 0.15), 0.5), FootBump(np.zeros(d), 0.7), DistanceIndicator(0.6, d)]


def invariance_rows(d, k, rng, quad):
    rows = []
    for F in invariance_functions(d):
        B = PureBoost.from_rapidity(rng.uniform(-1.0, 1.0))
        rows.append(invariance_sides(F, B, quad, d, k).row())
    return rows


def invariance_suite(d, k, seed, quad=None, n_equivariance=50, tensor=None):
    """Measure invariance (Monte Carlo by default) and transform equivariance (tensor rules)."""
    quad = quad or Quadrature(kind="monte_carlo", samples=10 ** 6, seed=seed)
    tensor = tensor or Quadrature()
    rng = np.random.default_rng([seed, 3])
    return invariance_rows(d, k, rng, quad) + equivariance_rows(d, k, rng, tensor, n_equivariance)


def drury_pairs(d, k):
    """Three (f, F) pairs with compact supports."""
    if d == 2:
        return [(Bump([0.0, 0.0], 0.8), FootBump([0.1, 0.0], 0.7)),
                (Bump([0.2, 0.1], 0.5), AngleOffsetBump(0.3, 0.1, 0.4, 0.5)),
                (Truncated(h0(2, 1), 3.0), DistanceIndicator(0.5))]
    return [(Bump(np.zeros(d), 0.8), FootBump(np.full(d, 0.1), 0.7)),
            (Bump(np.full(d, 0.1), 0.5), FootBump(np.zeros(d), 0.4)),
            (Truncated(h0(d, k), 1.5), DistanceIndicator(0.5, d))]


def drury_suite(d, k, seed, quad=None):
    """Drury sides for three pairs; each pair's calibration is compared with the pinned value
    (when known) and with every other pair."""
    quad = quad or Quadrature(kind="monte_carlo", samples=10 ** 6, seed=seed)
    dims = Dims(d, k)
    pinned = DRURY_CALIBRATION.get((d, k))
    rows, cals = [], []
    for i, (f, F) in enumerate(drury_pairs(d, k)):
        # distinct streams per pair
        ds = drury_sides(f, F, dims, replace(quad, seed=(quad.seed + 10 * i) % 2 ** 64))
        cals.append(ds)
        if pinned is not None:
            rows.append(est_row("drury", f"d={d};k={k};pair={i};calibration={pinned:g}",
                                ds.lhs, ds.rhs.scaled(pinned)))
    for i in range(len(cals)):
        for j in range(i + 1, len(cals)):
            a, b = cals[i], cals[j]
            ok = a.defined and b.defined and abs(a.calibration - b.calibration) <= 3.0 * math.hypot(
                a.calibration_err, b.calibration_err)
            rows.append(["drury_calibration", f"d={d};k={k};pairs={i},{j}", a.calibration,
                         b.calibration, a.calibration_err, b.calibration_err, bool(ok)])
    return rows, cals


# ---------------------------------------------------------------------------
# constants, curves, decompositions


CLOSED_FORM_TOL = 1e-3


def sharp_constant_checks(d, k, quad=None):
    """Computed constants and their comparison with the closed forms (where known)."""
    sc = sharp_constants(Dims(d, k), quad or Quadrature())
    closed = closed_form_constants(d, k)
    rows = []
    if closed is not None:
        for key in ("A0", "Aplus", "Aminus"):
            got = getattr(sc, key)
            ok = abs(got - closed[key]) <= CLOSED_FORM_TOL
            rows.append([key, f"d={d};k={k};abs_tol={CLOSED_FORM_TOL:g}", got, closed[key],
                         sc.errors[key], 0.0, bool(ok)])
    return sc, rows


def ratio_curve_checks(curve, A0, sigmas=3.0):
    """Strictly positive gaps, non-increasing along the sweep, small final gap at lambda = 32."""
    rows = []
    for c in curve:
        rows.append(["gap_positive", f"lambda={c.lam:g}", c.gap, 0.0, c.ratio_err, 0.0,
                     bool(c.gap > sigmas * c.ratio_err)])
    for a, b in zip(curve, curve[1:]):
        rows.append(["gap_non_increasing", f"lambda={a.lam:g},{b.lam:g}", b.gap, a.gap,
                     b.ratio_err, a.ratio_err,
                     bool(b.gap <= a.gap + sigmas * math.hypot(a.ratio_err, b.ratio_err))])
    for c in curve:
        if c.lam == 32.0:
            rows.append(["gap_small", "lambda=32;bound=0.02*A0", c.gap, 0.02 * A0, c.ratio_err, 0.0,
                         bool(c.gap <= 0.02 * A0)])
    return rows


def decomposition_rows(M, method="polar"):
    fl = decompose_lorentz(M, method=method)
    valid = True
    try:
        fl.validate()
    except ValueError:
        valid = False
    err = float(np.max(np.abs(fl.product() - M)) / max(1.0, np.max(np.abs(M))))
    ok = valid and err <= RECONSTRUCTION_TOL
    return fl, ["reconstruction", f"method={method};factors={len(fl)};valid={valid}", err, 0.0,
                0.0, 0.0, bool(ok)]


def decomposition_suite(d, seed, n=100, method="polar"):
    rng = np.random.default_rng([seed, 4])
    return [decomposition_rows(random_lorentz(d, rng).matrix, method)[1] for _ in range(n)]
