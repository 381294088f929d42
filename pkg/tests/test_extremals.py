import math

import numpy as np
import pytest

from kplane.errors import SingularMatrixError, SupportError, ZeroDenominatorError
from kplane.extremals import (
    RATIO_CURVE_COLUMNS, closed_form_constants, extremal_eval, h0, h_lambda, lift,
    random_family_member, ratio, ratio_curve, sharp_constant, sharp_constants, truncated_lift,
    unlift, write_ratio_curve,
)
from kplane.functions import Bump, Constant, Grid, Truncated, zero
from kplane.geometry import Dims, chart_lift
from kplane.quadrature import Box, Quadrature, integrate
from kplane.records import read_csv
from kplane.suites import random_bump
from kplane.transform import lp_norm

D21 = Dims(2, 1)


def test_closed_forms_rederived():
    # |h0|_{3/2}^{3/2} = 2 pi and |R0 h0|_3^3 = pi * int pi^3 (1+t^2)^{-3/2} dt = 2 pi^4
    A0 = (2 * math.pi ** 4) ** (1 / 3) / (2 * math.pi) ** (2 / 3)
    # |1|_{3/2} on S^2 = (4 pi)^{2/3}, |R+ 1|_3^3 = (2 pi)^3 * 2 pi
    Ap = (16 * math.pi ** 4) ** (1 / 3) / (4 * math.pi) ** (2 / 3)
    cf = closed_form_constants(2, 1)
    assert cf["A0"] == pytest.approx(A0, rel=1e-15) == pytest.approx(2 ** (-1 / 3) * math.pi ** (2 / 3))
    assert cf["Aplus"] == pytest.approx(Ap, rel=1e-15) == pytest.approx(math.pi ** (2 / 3))
    assert cf["Aplus"] / cf["A0"] == pytest.approx(2 ** (1 - 1 / 1.5))
    assert closed_form_constants(3, 1) is None


def test_extremal_eval_examples(rng):
    I, o = np.eye(2), np.zeros(2)
    assert extremal_eval("0", 1.0, I, o, [0.0, 0.0], 1) == 1.0
    assert extremal_eval("0", 1.0, I, o, [1.0, 0.0], 1) == pytest.approx(0.5)
    th = rng.normal(size=(10, 3))
    th /= np.linalg.norm(th, axis=1)[:, None]
    assert np.allclose(extremal_eval("+", 1.0, I, o, th, 1), 1.0)
    with pytest.raises(SingularMatrixError):
        extremal_eval("0", 1.0, np.zeros((2, 2)), o, [0.0, 0.0], 1)


def test_h_lambda_examples(quad):
    x = np.random.default_rng(0).normal(size=(20, 2))
    assert np.allclose(h_lambda(1.0, 2, 1)(x), h0(2, 1)(x))
    n0 = lp_norm(h0(2, 1), "0", 1.5, quad).value
    for lam in (0.5, 4.0, 32.0):
        assert lp_norm(h_lambda(lam, 2, 1), "0", 1.5, quad).value == pytest.approx(n0, rel=1e-3)
    # L^p mass outside the unit ball shrinks as lambda grows
    def outside(lam):
        f = h_lambda(lam, 2, 1)
        return n0 ** 1.5 - lp_norm(Truncated(f, 1.0), "0", 1.5, quad).value ** 1.5
    assert outside(4.0) < outside(1.0)
    with pytest.raises(ValueError):
        h_lambda(0.0, 2, 1)


def test_lift_examples(rng):
    x = rng.uniform(-3, 3, (50, 2))
    assert np.allclose(lift(h0(2, 1), "+", 1)(x), 1.0)
    assert np.all(lift(zero(2), "-", 1)(rng.uniform(-0.5, 0.5, (10, 2))) == 0.0)
    with pytest.raises(SupportError):
        lift(Bump([0.0, 0.0], 1.5), "-", 1)
    b = Bump([0.1, 0.0], 0.5)
    y = rng.uniform(-0.6, 0.6, (50, 2))
    assert np.allclose(unlift(lift(b, "-", 1), "-", 1)(y), b(y))


def test_sharp_constant_examples(quad):
    cf = closed_form_constants(2, 1)
    v, err, na = sharp_constant("0", D21, quad)
    assert abs(v - cf["A0"]) < 1e-3 and not na
    v, err, na = sharp_constant("+", D21, quad)
    assert abs(v - cf["Aplus"]) < 1e-3
    v, err, na = sharp_constant("-", D21, quad)
    assert abs(v - cf["A0"]) < 1e-3 and na
    sc = sharp_constants(D21, quad)
    assert sc.Aminus == sc.A0 and sc.A0 > 0 and sc.Aplus > 0
    assert sc.convention_id == "kplane-haar-v1"


def test_ratio_examples(quad, rng):
    A0 = closed_form_constants(2, 1)["A0"]
    assert ratio(h0(2, 1), "0", D21, quad).ratio == pytest.approx(A0, rel=1e-8)
    f = random_family_member("0", 2, 1, rng)
    assert ratio(f, "0", D21, quad).ratio == pytest.approx(A0, rel=1e-2)
    with pytest.raises(ZeroDenominatorError):
        ratio(zero(2), "0", D21, quad)


def test_scaling_invariance(quad):
    r = [ratio(h_lambda(lam, 2, 1), "0", D21, quad) for lam in (0.25, 1.0, 3.0)]
    assert max(x.ratio for x in r) - min(x.ratio for x in r) <= 3 * sum(x.ratio_err for x in r) + 1e-9


def test_upper_bound_for_generated_functions(rng):
    quad = Quadrature(order=12)
    sc = sharp_constants(D21, quad)
    grid_vals = 1.0 + 0.3 * rng.random((6, 6))
    tests = [random_bump(rng, 2) for _ in range(3)]
    tests.append(Grid(grid_vals, [-0.5, -0.5], [0.5, 0.5]))
    tests.append(random_bump(rng, 2) + 0.5 * random_bump(rng, 2))
    for f in tests:
        for nu in ("0", "+", "-"):
            g = f if nu == "0" else lift(f, nu, 1)
            r = ratio(g, nu, D21, quad)
            assert r.below(sc.value(nu))
            # hyperbolic test functions stay strictly below
            if nu == "-":
                assert r.ratio < sc.Aminus - 3 * r.ratio_err


def test_ratio_curve_validation(tmp_path):
    with pytest.raises(ValueError):
        ratio_curve([2, 1], D21)
    with pytest.raises(ValueError):
        ratio_curve([0, 1], D21)
    curve = ratio_curve([1.0, 4.0], D21, Quadrature(order=12))
    assert all(c.gap > 0 for c in curve) and curve[1].gap < curve[0].gap
    path = write_ratio_curve(tmp_path / "curve.csv", curve, {"d": 2})
    rows = read_csv(path)
    assert list(rows[0].keys()) == RATIO_CURVE_COLUMNS
    assert float(rows[1]["ratio"]) == curve[1].ratio
    assert "kplane-haar-v1" in path.read_text().splitlines()[0]


def test_family_members_hit_constants(rng):
    quad = Quadrature(order=16)
    cf = closed_form_constants(2, 1)
    for nu, A in (("0", cf["A0"]), ("+", cf["Aplus"])):
        f = random_family_member(nu, 2, 1, rng)
        assert ratio(f, nu, D21, quad).ratio == pytest.approx(A, rel=1e-2)
    with pytest.raises(SupportError):
        random_family_member("-", 2, 1, rng)
