import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pyramidreg.errors import DofMismatchError, InputError, ParseError
from pyramidreg.geometry import (
    SE2, SE3, RigidMotion, apply, compose, format_matrix, inverse, parse_matrix, pose_error, rot_axis_angle, rot_z,
)

from conftest import random_motion

seeds = st.integers(0, 2**32 - 1)


def test_identity_leaves_points():
    P = np.arange(12.0).reshape(4, 3)
    assert np.array_equal(apply(RigidMotion.identity(), P), P)


def test_rejects_reflection_and_bad_shapes():
    with pytest.raises(ValueError):
        RigidMotion(np.diag([1.0, 1.0, -1.0]), np.zeros(3))
    with pytest.raises(ValueError):
        RigidMotion(np.eye(3) * 2, np.zeros(3))
    with pytest.raises(ValueError):
        RigidMotion(np.eye(3), np.zeros(2))


def test_se2_structure_enforced():
    with pytest.raises(ValueError):
        RigidMotion(rot_axis_angle([1, 0, 0], 0.3), np.zeros(3), SE2)
    with pytest.raises(ValueError):
        RigidMotion(rot_z(0.3), np.array([1.0, 2.0, 0.5]), SE2)
    T = RigidMotion.planar(0.4, 1.0, -2.0)
    assert T.dof == SE2 and T.translation[2] == 0


def test_arrays_read_only():
    T = RigidMotion.identity()
    with pytest.raises(ValueError):
        T.rotation[0, 0] = 2.0


def test_compose_order():
    A = RigidMotion(np.eye(3), np.array([1.0, 0, 0]))
    B = RigidMotion(rot_z(np.pi / 2), np.zeros(3))
    p = np.array([[1.0, 0, 0]])
    # B first, then A
    assert np.allclose(apply(compose(A, B), p), [[1.0, 1.0, 0.0]])


def test_compose_dof_mismatch():
    with pytest.raises(DofMismatchError):
        compose(RigidMotion.identity(SE2), RigidMotion.identity(SE3))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_compose_associative_and_inverse(seed):
    rng = np.random.default_rng(seed)
    A, B, C = (random_motion(rng) for _ in range(3))
    L = compose(compose(A, B), C).matrix()
    R = compose(A, compose(B, C)).matrix()
    assert np.allclose(L, R, atol=1e-9)
    I = compose(A, inverse(A))
    assert np.allclose(I.matrix(), np.eye(4), atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_planar_closed_under_ops(seed):
    rng = np.random.default_rng(seed)
    A, B = random_motion(rng, dof=SE2), random_motion(rng, dof=SE2)
    for T in (compose(A, B), inverse(A)):
        assert T.dof == SE2
        assert T.translation[2] == 0.0


def test_pose_error_units():
    gt = RigidMotion.identity()
    est = RigidMotion(rot_z(np.radians(3.0)), np.array([0.3, 0.4, 0.0]))
    te, re = pose_error(est, gt)
    assert te == pytest.approx(0.5)
    assert re == pytest.approx(3.0)
    assert pose_error(gt, gt) == (0.0, 0.0)


def test_matrix_text_roundtrip(rng):
    T = random_motion(rng)
    text = format_matrix(T)
    assert len(text.strip().splitlines()) == 4
    assert text.strip().splitlines()[-1].split() == ["0", "0", "0", "1"]
    back = parse_matrix(text)
    assert np.allclose(back.matrix(), T.matrix(), atol=1e-10)


def test_parse_matrix_errors():
    with pytest.raises((ParseError, InputError, ValueError)):
        parse_matrix("1 0 0 0\n0 1 0 0\n")
