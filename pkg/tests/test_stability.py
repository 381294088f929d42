
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kplane.errors import RegimeError
from kplane.extremals import h0, lift, random_family_member
from kplane.functions import Bump, Extremal, Gaussian, Rotated, Sum, Truncated, zero
from kplane.geometry import Dims, random_rotation
from kplane.quadrature import Quadrature
from kplane.records import read_csv
from kplane.stability import (
    STABILITY_COLUMNS, deficit_scan, distance_to_family, family_distance_check,
    offcenter_family, radial_family, write_scan,
)

D21 = Dims(2, 1)
QUAD = Quadrature(order=12)


def test_family_member_has_zero_distance(rng):
    for nu in ("0", "+"):
        f = random_family_member(nu, 2, 1, rng)
        assert distance_to_family(f, nu, D21, QUAD).distance <= 1e-6


def test_zero_function_distance():
    fd = distance_to_family(zero(2), "0", D21, QUAD)
    assert fd.distance == 0.0 and fd.converged


def test_perturbed_distance_is_stable_across_seeds():
    f = Sum(h0(2, 1), 0.1 * Bump([0.3, 0.0], 0.6))
    ds = [distance_to_family(f, "0", D21, QUAD, seed=s).distance for s in range(5)]
    assert ds[0] > 1e-3
    assert max(ds) - min(ds) <= 1e-3 * max(ds)


def test_best_params_reproduce_distance():
    f = Sum(h0(2, 1), 0.2 * Gaussian([0.4, -0.2], 0.5))
    fd = distance_to_family(f, "0", D21, QUAD)
    assert abs(family_distance_check(f, "0", D21, QUAD, fd) - fd.distance) <= 1e-8 * fd.distance


def test_distance_rotation_invariant(rng):
    f = Sum(h0(2, 1), 0.2 * Gaussian([0.4, 0.0], 0.5))
    R = random_rotation(2, rng)
    d1 = distance_to_family(f, "0", D21, QUAD).distance
    d2 = distance_to_family(Rotated(f, R), "0", D21, QUAD).distance
    assert d2 == pytest.approx(d1, rel=1e-3)


def test_hyperbolic_distance_uses_ball_nodes():
    g = lift(Truncated(h0(2, 1), 0.9), "-", 1)
    fd = distance_to_family(g, "-", D21, QUAD)
    # truncation keeps it away from the family but close
    assert 0 < fd.distance < 0.5


def test_regime_checks():
    with pytest.raises(RegimeError):
        deficit_scan(offcenter_family(Dims(3, 1), eps=(0.1,)), "0", Dims(3, 1), QUAD, regime="radial")
    with pytest.raises(RegimeError):
        deficit_scan(radial_family("0", Dims(3, 1), eps=(0.1,)), "0", Dims(3, 1), QUAD, regime="hyperplane")
    with pytest.raises(RegimeError):
        deficit_scan([], "0", D21, QUAD, regime="nope")


def test_family_members_are_excluded_from_fit(rng):
    members = [random_family_member("0", 2, 1, rng) for _ in range(2)]
    members += radial_family("0", D21, eps=(0.3,))
    fit = deficit_scan(members, "0", D21, QUAD, regime="hyperplane")
    assert len(fit.records) == 3
    assert [r.member_id for r in fit.eligible] == ["m002"]
    assert fit.fitted_c > 0


@settings(max_examples=10)
@given(st.floats(0.02, 0.5), st.floats(0.3, 1.0))
def test_deficit_nonnegative(eps, width):
    f = Sum(h0(2, 1), eps * Extremal(1.0, np.eye(2) / width, np.zeros(2), 1))
    fit = deficit_scan([f], "0", D21, QUAD, regime="radial")
    r = fit.records[0]
    assert r.deficit >= -3 * r.ratio_err - 1e-12


def test_write_scan(tmp_path):
    fit = deficit_scan(radial_family("0", D21, eps=(0.2, 0.4)), "0", D21, QUAD)
    write_scan(tmp_path / "s.csv", tmp_path / "s.json", fit, {"d": 2})
    rows = read_csv(tmp_path / "s.csv")
    assert list(rows[0].keys()) == STABILITY_COLUMNS and len(rows) == 2
    body = (tmp_path / "s.json").read_text()
    assert "fitted_c" in body and "kplane-haar-v1" in body
