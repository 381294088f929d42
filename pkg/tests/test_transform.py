import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kplane.errors import DegenerateSimplexError, DomainError, SupportError
from kplane.extremals import h0
from kplane.functions import (
    AngleOffsetBump, Bump, Constant, DistanceIndicator, FootBump, Gaussian, Lifted, PlaneZero,
    Rotated, Truncated, zero,
)
from kplane.geometry import Dims, KPlane, random_rotation
from kplane.lorentz import PureBoost
from kplane.quadrature import Quadrature, agree
from kplane.suites import random_bump, random_plane_through
from kplane.transform import (
    DRURY_CALIBRATION, det_relation_sides, drury_sides, equivariance_sides, invariance_sides,
    kplane_transform, lp_norm, rtilde, transfer_sides, transform_lq_norm,
)

LINE_0 = KPlane.from_base_frame([0.0, 0.0], [[1.0, 0.0]])
LINE_06 = KPlane.from_base_frame([0.6, 0.0], [[0.0, 1.0]])


def test_kplane_transform_examples(quad):
    h = h0(2, 1)
    assert kplane_transform(h, LINE_0, "0", quad).value == pytest.approx(math.pi, rel=1e-12)
    assert kplane_transform(h, LINE_06, "0", quad).value == pytest.approx(math.pi / math.sqrt(1.36), rel=1e-12)
    one = Constant(2, 1.0)
    for method in ("chart", "polar"):
        assert kplane_transform(one, LINE_06, "+", quad, method=method).value == pytest.approx(2 * math.pi, rel=1e-12)


def test_hyperbolic_transform_needs_ball_support(quad):
    with pytest.raises(SupportError):
        kplane_transform(Bump([0.5, 0.0], 0.8), LINE_0, "-", quad)
    with pytest.raises(DomainError):
        kplane_transform(Bump([0.0, 0.0], 0.5), KPlane.from_base_frame([1.2, 0], [[0, 1]]), "-", quad)


def test_rtilde_examples(quad):
    h = h0(2, 1)
    assert rtilde(h, [[0, 0], [1, 0]], quad).value == pytest.approx(math.pi, rel=1e-12)
    assert rtilde(h, [[0, 0], [2, 0]], quad).value == pytest.approx(math.pi / 2, rel=1e-12)
    with pytest.raises(DegenerateSimplexError):
        rtilde(Gaussian(np.zeros(2), 1.0), [[0, 0], [1, 0], [2, 0]], quad)


@settings(max_examples=50)
@given(st.integers(0, 2), st.integers(0, 2 ** 32 - 1))
def test_det_relation(case, seed):
    d, k = [(2, 1), (3, 1), (3, 2)][case]
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (k + 1, d))
    if np.linalg.matrix_rank(pts[1:] - pts[0], tol=1e-3) < k:
        return
    f = Gaussian(rng.uniform(-0.5, 0.5, d), float(rng.uniform(0.3, 1.0)))
    lhs, rhs = det_relation_sides(f, pts, Quadrature(order=12))
    assert agree(lhs, rhs)


def test_lp_norm_examples(quad):
    assert lp_norm(h0(2, 1), "0", 1.5, quad).value == pytest.approx((2 * math.pi) ** (2 / 3), rel=1e-12)
    one = Constant(2, 1.0)
    for method in ("chart", "polar"):
        assert lp_norm(one, "+", 1.5, quad, method=method).value == pytest.approx((4 * math.pi) ** (2 / 3), rel=1e-12)
    for nu in ("0", "+", "-"):
        assert lp_norm(zero(2), nu, 1.5, quad).value == 0.0


def test_transform_lq_norm_examples(quad):
    assert transform_lq_norm(h0(2, 1), 1, "0", 3, quad).value == pytest.approx((2 * math.pi ** 4) ** (1 / 3), rel=1e-10)
    assert transform_lq_norm(Constant(2, 1.0), 1, "+", 3, quad).value == pytest.approx((16 * math.pi ** 4) ** (1 / 3), rel=1e-10)
    assert transform_lq_norm(zero(2), 1, "0", 3, quad).value == 0.0


@pytest.mark.parametrize("d,k", [(2, 1), (3, 1), (3, 2)])
def test_lift_transfers_norms(d, k, quad, rng):
    dims = Dims(d, k)
    f = Truncated(h0(d, k), 0.9) + 0.5 * random_bump(rng, d)
    flat = lp_norm(f, "0", dims.p, quad).value
    assert lp_norm(Lifted(f, "-", k), "-", dims.p, quad, method="polar").value == pytest.approx(flat, rel=1e-3)
    # both hemispheres count on the sphere
    assert lp_norm(Lifted(f, "+", k), "+", dims.p, quad, method="polar").value == pytest.approx(
        2 ** (1 / float(dims.p)) * flat, rel=1e-3)
    if d == 2:
        Rf = transform_lq_norm(f, k, "0", dims.q, quad).value
        assert transform_lq_norm(Lifted(f, "-", k), k, "-", dims.q, quad).value == pytest.approx(Rf, rel=1e-3)
        assert transform_lq_norm(Lifted(f, "+", k), k, "+", dims.q, quad).value == pytest.approx(2 * Rf, rel=1e-3)


def test_rotation_invariance(quad, rng):
    f = Bump([0.3, -0.1, 0.2], 0.5) + Gaussian([0.0, 0.2, 0.0], 0.4)
    R = random_rotation(3, rng)
    g = Rotated(f, R)
    pi = KPlane.from_base_frame([0.1, 0.1, 0.0], [[1.0, 0.3, 0.2], [0.0, 1.0, -0.4]])
    pr = KPlane.from_base_frame(R @ pi.base, pi.frame @ R.T)
    assert agree(kplane_transform(g, pr, "0", quad), kplane_transform(f, pi, "0", quad))
    assert lp_norm(g, "0", 2, quad).value == pytest.approx(lp_norm(f, "0", 2, quad).value, rel=1e-8)


def test_transfer_examples(quad):
    b = Bump([0.0, 0.0], 0.7)
    s = transfer_sides(b, LINE_0, quad)
    assert s.passed and s.lhs.value == pytest.approx(s.rhs.value, rel=1e-12)
    s = transfer_sides(Bump([0.5, 0.1], 0.4), LINE_06, quad)
    assert s.passed and s.lhs.value > 0
    with pytest.raises(DomainError):
        transfer_sides(b, KPlane.from_base_frame([1.2, 0], [[0, 1]]), quad)


def test_equivariance_examples(quad):
    g = Bump([0.1, 0.2], 0.5)
    s = equivariance_sides(g, PureBoost(1, 0), LINE_0, quad)
    assert s.passed and s.lhs.value == pytest.approx(s.rhs.value, rel=1e-8)
    s = equivariance_sides(g, PureBoost(1.25, 0.75), KPlane.from_base_frame([0.0, -0.4], [[1, 0.2]]), quad)
    assert s.passed and s.lhs.value > 0
    with pytest.raises(SupportError):
        equivariance_sides(Bump([0.5, 0.5], 0.2), PureBoost(1.25, 0.75), KPlane.from_base_frame([0, 0.7], [[1, 0]]), quad)


def test_invariance_examples():
    F = AngleOffsetBump(0.7, 0.2, 0.5, 0.3)
    mc = Quadrature(kind="monte_carlo", samples=100_000, seed=5)
    s = invariance_sides(F, PureBoost(1, 0), mc)
    assert s.lhs.value == pytest.approx(s.rhs.value, rel=0.05)
    s = invariance_sides(F, PureBoost(1.25, 0.75), Quadrature(order=24))
    assert s.passed and s.lhs.value == pytest.approx(s.rhs.value, rel=1e-4)
    s = invariance_sides(PlaneZero(), PureBoost(1.25, 0.75), mc)
    assert s.lhs.value == 0.0 and s.rhs.value == 0.0
    with pytest.raises(SupportError):
        invariance_sides(FootBump([0.8, 0.0], 0.5), PureBoost(1.25, 0.75), mc)


def test_drury_examples():
    mc = Quadrature(kind="monte_carlo", samples=200_000, seed=9)
    dims = Dims(2, 1)
    z = drury_sides(zero(2), FootBump([0.0, 0.0], 0.5), dims, mc)
    assert z.lhs.value == 0.0 and z.rhs.value == 0.0 and not z.defined
    c = DRURY_CALIBRATION[(2, 1)]
    ds = drury_sides(Truncated(h0(2, 1), 3.0), DistanceIndicator(0.5), dims, mc)
    assert ds.consistent_with(c)
    ds = drury_sides(Bump([0.2, 0.1], 0.5), FootBump([0.1, 0.0], 0.4), dims, mc)
    assert ds.consistent_with(c)
    with pytest.raises(ValueError):
        drury_sides(Bump([0.0, 0.0], 0.5), DistanceIndicator(0.5), dims, Quadrature())


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6))
def test_polar_route_matches_chart_on_planes_missing_the_foot(seed):
    # the foot of the plane is usually outside the bump's support here
    rng = np.random.default_rng(seed)
    f = Bump(rng.uniform(-0.4, 0.4, 3), float(rng.uniform(0.2, 0.5)))
    c, r = f.support.bounding_ball()
    pi = random_plane_through(rng, c + 0.7 * r * rng.uniform(-1, 1, 3) / np.sqrt(3), 2)
    q = Quadrature(order=16)
    polar = kplane_transform(f, pi, "0", q, method="polar").value
    chart = kplane_transform(f, pi, "0", q).value
    assert polar == pytest.approx(chart, rel=1e-9, abs=1e-14)
