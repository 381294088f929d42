import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from kplane.errors import DegenerateSimplexError, DomainError, EquatorError
from kplane.geometry import (
    Dims, KPlane, Quadric, bracket, chart_lift, chart_project, geodesic_patch,
    parallelotope_volume, plane_bracket, plane_from_points, random_rotation, simplex_volume,
)
from kplane.quadrature import gauss_rule

coords = st.floats(-0.95, 0.95, allow_nan=False)


def ball_point(d):
    return arrays(float, d, elements=coords).filter(lambda x: x @ x < 0.9)


def test_dims_exponents_are_exact():
    dims = Dims(2, 1)
    assert dims.p == pytest.approx(1.5) and str(dims.p) == "3/2"
    assert dims.q == 3
    assert str(Dims(3, 2).p) == "4/3"
    with pytest.raises(ValueError):
        Dims(3, 3)
    with pytest.raises(ValueError):
        Dims(1, 1)


def test_bracket_examples():
    assert bracket([0.0, 0.0], "+") == 1.0
    assert bracket([0.6, 0.0], "-") == pytest.approx(0.8, abs=1e-15)
    assert bracket([1.0, 0.0], "+") == pytest.approx(math.sqrt(2))
    with pytest.raises(DomainError):
        bracket([1.0, 0.0], "-")


def test_chart_project_examples():
    assert np.allclose(chart_project([0, 0, 1], "-"), [0, 0])
    assert np.allclose(chart_project([-0.75, 0, 1.25], "-"), [0.6, 0], atol=1e-15)
    with pytest.raises(EquatorError):
        chart_project([1, 0, 0], "+")


def test_chart_lift_examples():
    assert np.allclose(chart_lift([0, 0], "-"), [0, 0, 1])
    assert np.allclose(chart_lift([0.6, 0], "-"), [-0.75, 0, 1.25], atol=1e-15)
    s = 1 / math.sqrt(2)
    assert np.allclose(chart_lift([1, 0], "+"), [-s, 0, s], atol=1e-15)
    with pytest.raises(DomainError):
        chart_lift([1.0, 0.5], "-")


@pytest.mark.parametrize("sign", ["+", "-"])
@pytest.mark.parametrize("d", [2, 3])
def test_round_trip_and_quadric(sign, d, rng):
    x = rng.uniform(-1, 1, (1000, d)) * 0.99 / math.sqrt(d)
    z = chart_lift(x, sign)
    assert np.max(np.abs(chart_project(z, sign) - x)) < 1e-12
    form = np.sum(z[:, :-1] ** 2, axis=1)
    if sign == "+":
        assert np.max(np.abs(form + z[:, -1] ** 2 - 1)) < 1e-12
    else:
        assert np.max(np.abs(z[:, -1] ** 2 - form - 1)) < 1e-12
        assert np.all(z[:, -1] > 0)


def test_plane_from_points_examples():
    pi = plane_from_points([[0, 0], [1, 0]])
    assert np.allclose(pi.base, [0, 0]) and np.allclose(pi.frame, [[1, 0]])
    pi = plane_from_points([[0, 1], [1, 1]])
    assert np.allclose(pi.base, [0, 1]) and np.allclose(pi.frame, [[1, 0]])
    with pytest.raises(DegenerateSimplexError):
        plane_from_points([[0, 0], [1, 0], [2, 0]])


def test_canonical_frame_invariants(rng):
    for _ in range(20):
        pi = KPlane.from_base_frame(rng.normal(size=3), rng.normal(size=(2, 3)))
        assert np.allclose(pi.frame @ pi.frame.T, np.eye(2), atol=1e-12)
        assert np.max(np.abs(pi.frame @ pi.base)) < 1e-12
        for v in pi.frame:
            assert v[np.flatnonzero(np.abs(v) > 1e-12)[0]] > 0


def test_plane_representation_independent(rng):
    for d, k in [(2, 1), (3, 1), (3, 2)]:
        pts = rng.normal(size=(k + 1, d))
        pi = plane_from_points(pts)
        # other points of the same plane
        lam = rng.normal(size=(k + 1, k))
        other = plane_from_points(pi.point(lam))
        assert pi.same_as(other)
        assert pi.contains(pts)


def test_plane_bracket_examples():
    assert plane_bracket(KPlane.from_base_frame([0, 0], [[0, 1]])) == 1.0
    assert plane_bracket(KPlane.from_base_frame([0.6, 0], [[0, 1]])) == pytest.approx(0.8)
    with pytest.raises(DomainError):
        plane_bracket(KPlane.from_base_frame([1.2, 0], [[0, 1]]))


def test_simplex_volume_examples():
    assert simplex_volume([[0, 0], [1, 0]]) == pytest.approx(1.0)
    assert simplex_volume([[0, 0], [1, 0], [0, 1]]) == pytest.approx(0.5)
    assert simplex_volume([[0, 0], [1, 0], [2, 0]]) == pytest.approx(0.0, abs=1e-15)
    assert parallelotope_volume([[0, 0], [1, 0], [0, 1]]) == pytest.approx(1.0)


@given(arrays(float, (3, 2), elements=st.floats(-3, 3)), arrays(float, 2, elements=st.floats(-3, 3)),
       arrays(float, (2, 2), elements=st.floats(-2, 2)), st.permutations([0, 1, 2]))
def test_simplex_volume_symmetries(pts, shift, M, perm):
    v = simplex_volume(pts)
    # sqrt(det Gram) resolves near-degenerate simplices only to ~sqrt(eps) * scale^2
    tol = 1e-6
    assert simplex_volume(pts[list(perm)]) == pytest.approx(v, rel=1e-9, abs=tol)
    assert simplex_volume(pts + shift) == pytest.approx(v, rel=1e-9, abs=tol)
    # k = d: a shared linear map scales the volume by |det M|
    assert simplex_volume(pts @ M.T) == pytest.approx(abs(np.linalg.det(M)) * v, rel=1e-8, abs=tol)


def _fd_patch_density(pi, nu, lam, h=1e-6):
    """Induced k-volume from a finite-difference Jacobian of the lift."""
    k, d = pi.frame.shape
    J = np.empty((d + 1, k))
    for j in range(k):
        e = np.zeros(k)
        e[j] = h
        J[:, j] = (chart_lift(pi.point(lam + e), nu) - chart_lift(pi.point(lam - e), nu)) / (2 * h)
    eta = np.eye(d + 1)
    if nu == "-":
        eta[-1, -1] = -1.0
    return math.sqrt(np.linalg.det(J.T @ eta @ J))


@pytest.mark.parametrize("nu", ["-", "+"])
def test_patch_density_matches_finite_differences(nu, rng):
    checked = 0
    while checked < 100:
        d = int(rng.integers(2, 4))
        k = int(rng.integers(1, d))
        base = rng.normal(size=d) * 0.3
        pi = KPlane.from_base_frame(base, rng.normal(size=(k, d)))
        patch = geodesic_patch(pi, nu)
        lam = rng.normal(size=k) * 0.3
        if nu == "-" and pi.point(lam) @ pi.point(lam) > 0.9:
            continue
        assert patch.density(lam) == pytest.approx(_fd_patch_density(pi, nu, lam), rel=1e-6)
        checked += 1


def test_patch_density_examples():
    pi = KPlane.from_base_frame([0, 0], [[1, 0]])
    assert geodesic_patch(pi, "-").density(np.zeros(1)) == pytest.approx(1.0)
    # half great circle per hemisphere sheet
    t, w = gauss_rule(-math.pi / 2, math.pi / 2, 64)
    dens = geodesic_patch(pi, "+").density(np.tan(t)[:, None]) / np.cos(t) ** 2
    assert w @ dens == pytest.approx(math.pi, rel=1e-12)
    # chord at distance 0.6: induced length equals the hyperbolic length between chord points
    pi6 = KPlane.from_base_frame([0.6, 0], [[0, 1]])
    half = 0.5  # stay inside the chord |lam| < 0.8
    s, ws = gauss_rule(-half, half, 64)
    length = ws @ geodesic_patch(pi6, "-").density(s[:, None])
    z0, z1 = chart_lift([0.6, -half], "-"), chart_lift([0.6, half], "-")
    oracle = math.acosh(z0[-1] * z1[-1] - z0[:-1] @ z1[:-1])
    assert length == pytest.approx(oracle, rel=1e-12)


def test_quadric_restrict_and_max_norm(rng):
    Q = Quadric.ball([0.2, -0.1], 0.5)
    pts = rng.uniform(-1, 1, (20000, 2))
    inside = pts[Q.contains(pts)]
    assert Q.max_norm() >= np.max(np.linalg.norm(inside, axis=1))
    assert Q.max_norm() == pytest.approx(0.5 + math.hypot(0.2, 0.1))
    R = random_rotation(3, rng)
    A = R @ np.diag([1.0, 4.0, 9.0]) @ R.T
    c0 = np.array([0.1, 0.2, 0.0])
    E = Quadric(A, -A @ c0, c0 @ A @ c0 - 1.0)
    c, T = E.ellipsoid_map()
    y = rng.normal(size=(5000, 3))
    y /= np.linalg.norm(y, axis=1)[:, None]
    boundary = c + y @ T.T
    assert np.allclose(E.value(boundary), 0.0, atol=1e-10)
    assert E.max_norm() >= np.max(np.linalg.norm(boundary, axis=1)) - 1e-12
    assert E.max_norm() <= np.max(np.linalg.norm(boundary, axis=1)) + 1e-2
