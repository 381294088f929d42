import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from kplane.errors import (
    ConstraintError, DegenerateSimplexError, InvalidLorentzError, NullAxisError, PoleError,
)
from kplane.functions import Bump, Constant, Truncated
from kplane.geometry import Dims, KPlane, chart_lift, chart_project, plane_from_points, random_rotation
from kplane.lorentz import (
    FactorList, LorentzMap, PureBoost, bracket_ratio_sides, decompose_lorentz,
    decompose_reflection, induced_map, minkowski, minkowski_form, phi_apply, phi_jacobian,
    pullback_isometry, pure_boost, random_lorentz, reflection,
)
from kplane.suites import fd_jacobian_det
from kplane.transform import lp_norm

rapidity = st.floats(-2.5, 2.5, allow_nan=False)


def test_minkowski_examples():
    e1, e3 = np.eye(3)[0], np.eye(3)[2]
    assert minkowski(e1, e1) == 1.0
    assert minkowski(e3, e3) == -1.0
    assert minkowski([1, 0, 1], [1, 0, 1]) == 0.0


def test_reflection_examples():
    assert np.allclose(reflection(np.eye(3)[2]).matrix, np.diag([1, 1, -1]))
    assert np.allclose(reflection(np.eye(3)[0]).matrix, np.diag([-1, 1, 1]))
    with pytest.raises(NullAxisError):
        reflection([1, 0, 1])


@given(arrays(float, 4, elements=st.floats(-3, 3)))
def test_reflection_is_involutive_lorentz(n):
    if abs(minkowski(n, n)) < 1e-3:
        return
    R = reflection(n).matrix
    J = minkowski_form(3)
    assert np.allclose(R @ R, np.eye(4), atol=1e-10 * max(1, np.max(np.abs(R)) ** 2))
    assert np.allclose(R.T @ J @ R, J, atol=1e-9 * max(1, np.max(np.abs(R)) ** 2))


def test_pure_boost_examples():
    assert np.allclose(pure_boost(1, 0, 2).matrix, np.eye(3))
    M = pure_boost(1.25, 0.75, 2).matrix
    J = minkowski_form(2)
    assert np.allclose(M.T @ J @ M, J)
    with pytest.raises(ConstraintError):
        pure_boost(1, 1, 2)
    with pytest.raises(InvalidLorentzError):
        LorentzMap(np.diag([1.0, 1.0, 2.0]))


def test_induced_map_examples():
    phi = induced_map(PureBoost(1, 0), 2)
    x = np.array([0.3, -0.4])
    assert np.allclose(phi_apply(phi, x), x) and phi_jacobian(phi, x) == 1.0
    phi = induced_map(PureBoost(1.25, 0.75), 2)
    assert np.allclose(phi_apply(phi, [0, 0]), [0, 0.6])
    assert phi_jacobian(phi, [0, 0]) == pytest.approx(0.512)
    with pytest.raises(PoleError):
        phi_apply(phi, [0.1, -5 / 3])


@pytest.mark.parametrize("d", [2, 3])
def test_induced_map_matches_lift_boost_project(d, rng):
    for _ in range(50):
        B = PureBoost.from_rapidity(rng.uniform(-2, 2))
        x = rng.uniform(-1, 1, d) * 0.95 / math.sqrt(d)
        z = B.matrix(d) @ chart_lift(x, "-")
        assert np.allclose(induced_map(B, d)(x), chart_project(z, "-"), atol=1e-10)


@pytest.mark.parametrize("d", [2, 3])
def test_jacobian_by_finite_differences(d, rng):
    for _ in range(100):
        B = PureBoost(math.sqrt(1 + (b := rng.uniform(-2, 2)) ** 2), b)
        x = rng.uniform(-0.5, 0.5, d)
        phi = induced_map(B, d)
        assert phi.jacobian(x) == pytest.approx(fd_jacobian_det(phi, x), rel=1e-6)


@given(rapidity, rapidity, arrays(float, 3, elements=st.floats(-0.5, 0.5)))
def test_group_law(t1, t2, x):
    B1, B2 = PureBoost.from_rapidity(t1), PureBoost.from_rapidity(t2)
    lhs = induced_map(B1.compose(B2), 3)(x)
    rhs = induced_map(B1, 3)(induced_map(B2, 3)(x))
    assert np.allclose(lhs, rhs, atol=1e-10 * max(1.0, np.max(np.abs(rhs))))


def test_pullback_isometry_examples(quad):
    f = Bump([0.1, 0.2], 0.3)
    x = np.random.default_rng(0).uniform(-0.5, 0.5, (20, 2))
    assert np.allclose(pullback_isometry(f, PureBoost(1, 0), 1)(x), f(x))
    one = Truncated(Constant(2, 1.0), 0.99)
    assert pullback_isometry(one, PureBoost(1.25, 0.75), 1)(np.zeros((1, 2)))[0] == pytest.approx(0.64)
    p = Dims(2, 1).p
    S = pullback_isometry(f, PureBoost(1.25, 0.75), 1)
    assert lp_norm(S, "0", p, quad).value == pytest.approx(lp_norm(f, "0", p, quad).value, rel=1e-8)


def test_map_plane_matches_mapped_points(rng):
    for d, k in [(2, 1), (3, 1), (3, 2)]:
        phi = induced_map(PureBoost.from_rapidity(0.7), d)
        pts = rng.uniform(-0.5, 0.5, (k + 1, d))
        image = phi.map_plane(plane_from_points(pts))
        assert image.same_as(plane_from_points(phi(pts)), tol=1e-10)
        base, frame = phi.map_planes(plane_from_points(pts).base[None], plane_from_points(pts).frame[None])
        assert KPlane(base[0], frame[0]).same_as(image, tol=1e-10)


def test_bracket_ratio_examples(rng):
    lhs, rhs = bracket_ratio_sides([[0.1, 0.2], [0.5, -0.3]], PureBoost(1, 0))
    assert lhs == pytest.approx(1.0) and rhs == pytest.approx(1.0)
    for _ in range(100):
        pts = rng.uniform(-0.6, 0.6, (2, 2))
        lhs, rhs = bracket_ratio_sides(pts, PureBoost(1.25, 0.75))
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)
    with pytest.raises(DegenerateSimplexError):
        bracket_ratio_sides([[0, 0], [0.1, 0], [0.2, 0]], PureBoost(1.25, 0.75))


def _reconstructs(fl, M, tol=1e-10):
    fl.validate()
    return np.max(np.abs(fl.product() - M)) <= tol * max(1.0, np.max(np.abs(M)))


def test_decompose_reflection_examples():
    d = 2
    fl = decompose_reflection(np.eye(3)[2])
    assert _reconstructs(fl, np.diag([1.0, 1.0, -1.0]))
    assert all(f.kind != "boost" for f in fl)
    s = 0.75
    n = np.array([0.0, s, math.sqrt(1 + s * s)])
    fl = decompose_reflection(n)
    assert _reconstructs(fl, reflection(n).matrix)
    boosts = [f.data for f in fl if f.kind == "boost"]
    B = boosts[-1]
    assert np.allclose(B.matrix(d) @ n, [0, 0, 1])
    with pytest.raises(NullAxisError):
        decompose_reflection([1, 0, 1])


@given(arrays(float, 4, elements=st.floats(-2, 2)))
def test_decompose_reflection_any_axis(n):
    if abs(minkowski(n, n)) < 1e-3 * max(1.0, n @ n):
        return
    assert _reconstructs(decompose_reflection(n), reflection(n).matrix)


def test_decompose_lorentz_examples(rng):
    fl = decompose_lorentz(pure_boost(1.25, 0.75, 2))
    assert len(fl) == 1 and fl.factors[0].kind == "boost"
    assert (fl.factors[0].data.a, fl.factors[0].data.b) == (1.25, 0.75)
    with pytest.raises(InvalidLorentzError):
        decompose_lorentz(np.diag([1.0, 1.0, 2.0]))


@pytest.mark.parametrize("method", ["polar", "reflections"])
@pytest.mark.parametrize("d", [2, 3])
def test_decompose_lorentz_reconstructs(method, d):
    rng = np.random.default_rng([d, 11])
    for _ in range(50):
        L = random_lorentz(d, rng)
        assert _reconstructs(decompose_lorentz(L, method=method), L.matrix)


def test_reflection_sweep_handles_null_columns():
    # a large boost in (x_1, x_{d+1}): e_1 - L e_1 is nearly null
    t = 6.0
    M = np.eye(3)
    M[0, 0] = M[2, 2] = math.cosh(t)
    M[0, 2] = M[2, 0] = math.sinh(t)
    R = random_rotation(2, np.random.default_rng(1))
    L = np.block([[R, np.zeros((2, 1))], [np.zeros((1, 2)), np.ones((1, 1))]]) @ M
    assert _reconstructs(decompose_lorentz(L, method="reflections"), L, tol=1e-9)


def test_factor_list_json_round_trip(rng):
    fl = decompose_lorentz(random_lorentz(3, rng), method="reflections")
    text = fl.dumps()
    back = FactorList.from_json(json.loads(text))
    assert np.array_equal(back.product(), fl.product())
    assert [f["type"] for f in json.loads(text)["factors"]] == [f.kind for f in fl]
    assert np.allclose(fl.inverse().product() @ fl.product(), np.eye(4), atol=1e-9)
