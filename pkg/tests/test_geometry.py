import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import alpha_ref, rot_z
from vesselnav.geometry import (
    HyperEllipsoid,
    PlanarPose,
    alpha_value,
    body_from_world,
    geometric_scale,
    int_pow,
    quat_to_matrix,
    world_from_body,
    wrap_angle,
    yaw_matrix,
)

coord = st.floats(-50, 50, allow_nan=False)
axis = st.floats(0.05, 5.0)
order = st.integers(1, 4)
angle = st.floats(-20.0, 20.0, allow_nan=False)


def test_alpha_frozen_values():
    assert alpha_value(HyperEllipsoid(1, 1, 1, 1), (2, 0, 0)) == 4.0
    assert alpha_value(HyperEllipsoid(0.8, 0.4, 0.4, 1), (0.8, 0, 0)) == pytest.approx(1.0, abs=1e-15)
    assert alpha_value(HyperEllipsoid(1, 1, 1, 2), (1, 1, 0)) == 2.0


def test_alpha_vectorized_matches_scalar():
    E = HyperEllipsoid(0.7, 0.3, 1.1, 3)
    pts = np.random.default_rng(0).normal(size=(20, 3))
    got = alpha_value(E, pts)
    want = [alpha_ref(E.semi_axes, 3, p) for p in pts]
    np.testing.assert_allclose(got, want, rtol=1e-13)


def test_geometric_scale_frozen_values():
    assert geometric_scale(HyperEllipsoid(1, 1, 1, 1), (2, 0, 0)) == pytest.approx(2.0, rel=1e-15)
    assert geometric_scale(HyperEllipsoid(0.8, 0.4, 0.4, 1), (0, 0.4, 0)) == pytest.approx(1.0, rel=1e-15)


def test_geometric_scale_solves_boundary_equation():
    # independent root find of sum((p_i / (s a_i))^(2d)) = 1 by bisection
    E = HyperEllipsoid(1, 1, 1, 2)
    p = np.array([2.0, 0.0, 0.0])
    lo, hi = 1e-6, 100.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sum((p / (mid * E.semi_axes)) ** 4) > 1.0:
            lo = mid
        else:
            hi = mid
    assert geometric_scale(E, p) == pytest.approx(0.5 * (lo + hi), rel=1e-12)
    assert geometric_scale(E, p) == pytest.approx(2.0, rel=1e-15)


@given(axis, axis, axis, order, coord, coord, coord)
def test_boundary_points_have_unit_scale(a, b, c, d, x, y, z):
    E = HyperEllipsoid(a, b, c, d)
    p = np.array([x, y, z])
    if not np.any(p):
        return
    s = geometric_scale(E, p)
    if not (1e-100 < s < 1e100):
        return
    assert geometric_scale(E, p / s) == pytest.approx(1.0, rel=1e-12)


@given(axis, axis, axis, order, coord, coord, coord, st.floats(0.0, 10.0))
def test_alpha_homogeneity(a, b, c, d, x, y, z, lam):
    E = HyperEllipsoid(a, b, c, d)
    p = np.array([x, y, z])
    base = alpha_value(E, p)
    assert alpha_value(E, lam * p) == pytest.approx(lam ** (2 * d) * base, rel=1e-12, abs=1e-300)


@given(axis, axis, axis, order, coord, coord, coord)
def test_scale_power_is_alpha(a, b, c, d, x, y, z):
    E = HyperEllipsoid(a, b, c, d)
    p = (x, y, z)
    assert geometric_scale(E, p) ** (2 * d) == pytest.approx(alpha_value(E, p), rel=1e-12, abs=1e-300)


@given(axis, axis, axis, order, coord, coord, coord, st.tuples(st.booleans(), st.booleans(), st.booleans()))
def test_alpha_sign_symmetry(a, b, c, d, x, y, z, flips):
    E = HyperEllipsoid(a, b, c, d)
    p = np.array([x, y, z])
    q = p * np.where(flips, -1.0, 1.0)
    assert alpha_value(E, q) == alpha_value(E, p)


def test_frame_frozen_values():
    assert np.array_equal(body_from_world(PlanarPose.identity(), (1, 2, 3)), [1, 2, 3])
    q = body_from_world(PlanarPose((0, 0, 0), math.pi / 2), (0, 1, 0))
    np.testing.assert_allclose(q, [1, 0, 0], atol=1e-15)


@given(coord, coord, coord, angle, coord, coord, coord)
def test_frame_round_trip_and_isometry(rx, ry, rz, yaw, x, y, z):
    pose = PlanarPose((rx, ry, rz), yaw)
    p = np.array([x, y, z])
    b = body_from_world(pose, p)
    np.testing.assert_allclose(world_from_body(pose, b), p, atol=1e-12 * (1 + np.abs(p).max() + abs(rx) + abs(ry)))
    assert b[2] == pytest.approx(z - rz, abs=1e-12)
    assert np.linalg.norm(b) == pytest.approx(np.linalg.norm(p - pose.position), rel=1e-12, abs=1e-12)
    # rotation-matrix oracle
    np.testing.assert_allclose(b, rot_z(pose.yaw).T @ (p - pose.position), atol=1e-12)


@given(angle)
def test_quaternion_matches_yaw_matrix(yaw):
    pose = PlanarPose((0, 0, 0), yaw)
    np.testing.assert_allclose(quat_to_matrix(pose.quaternion), yaw_matrix(pose.yaw), atol=1e-15)
    assert np.linalg.norm(pose.quaternion) == pytest.approx(1.0, abs=1e-15)


@given(angle)
def test_dquat_dyaw_by_finite_differences(yaw):
    h = 1e-6
    fd = (PlanarPose((0, 0, 0), yaw + h).quaternion - PlanarPose((0, 0, 0), yaw - h).quaternion) / (2 * h)
    # the quaternion flips sign across the +/-pi wrap; compare on one branch only
    if abs(abs(wrap_angle(yaw)) - math.pi) < 1e-3:
        return
    np.testing.assert_allclose(PlanarPose((0, 0, 0), yaw).dquat_dyaw, fd, atol=1e-8)


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_wrap_angle_range(theta):
    w = wrap_angle(theta)
    assert -math.pi <= w < math.pi
    assert math.cos(w) == pytest.approx(math.cos(theta), abs=1e-9)
    assert math.sin(w) == pytest.approx(math.sin(theta), abs=1e-9)


def test_wrap_angle_edges():
    assert wrap_angle(math.pi) == -math.pi
    assert wrap_angle(-math.pi) == -math.pi
    assert wrap_angle(0.0) == 0.0


@given(st.floats(-3, 3, allow_nan=False), st.integers(1, 12))
def test_int_pow(x, n):
    assert int_pow(x, n) == pytest.approx(x**n, rel=1e-14, abs=1e-300)


@pytest.mark.parametrize("args", [(0, 1, 1), (1, -1, 1), (1, 1, float("inf")), (1, 1, float("nan"))])
def test_ellipsoid_rejects_bad_axes(args):
    with pytest.raises(ValueError):
        HyperEllipsoid(*args)


@pytest.mark.parametrize("d", [0, -1, 1.5])
def test_ellipsoid_rejects_bad_order(d):
    with pytest.raises(ValueError):
        HyperEllipsoid(1, 1, 1, d)


def test_pose_validation():
    with pytest.raises(ValueError):
        PlanarPose((0, 0), 0.0)
    with pytest.raises(ValueError):
        PlanarPose((0, 0, float("nan")), 0.0)
    with pytest.raises(ValueError):
        PlanarPose((0, 0, 0), float("inf"))
    assert PlanarPose((0, 0, 0), 3 * math.pi).yaw == pytest.approx(-math.pi)
