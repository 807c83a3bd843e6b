import numpy as np
import pytest

from tiltmav.so3 import (attitude_error, exp_so3, is_rotation, log_so3,
                         project_to_so3, random_rotation, rot_x, rot_z, skew, vee)


def test_skew_cross_product():
    assert np.allclose(skew([1, 0, 0]) @ [0, 1, 0], [0, 0, 1])
    rng = np.random.default_rng(0)
    for _ in range(50):
        v, w = rng.normal(size=3), rng.normal(size=3)
        assert np.allclose(skew(v) @ w, np.cross(v, w))


def test_vee_skew_roundtrip():
    assert np.array_equal(vee(skew([2, -3, 5])), [2.0, -3.0, 5.0])


def test_skew_zero():
    assert np.array_equal(skew([0, 0, 0]), np.zeros((3, 3)))


def test_vee_rejects_non_antisymmetric():
    with pytest.raises(ValueError):
        vee(np.eye(3))


def test_exp_log_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(100):
        phi = rng.normal(size=3)
        phi *= rng.uniform(0, 3.1) / np.linalg.norm(phi)
        r = exp_so3(phi)
        assert is_rotation(r)
        assert np.allclose(log_so3(r), phi, atol=1e-8)


def test_attitude_error_zero_at_identity():
    r = random_rotation(np.random.default_rng(2))
    assert np.allclose(attitude_error(r, r), 0.0)


def test_attitude_error_rot_z():
    for phi in (0.3, np.pi / 2, 1.2):
        e = attitude_error(rot_z(phi), np.eye(3))
        assert np.allclose(e, [0, 0, np.sin(phi)], atol=1e-12)
    assert np.allclose(attitude_error(rot_z(np.pi / 2), np.eye(3)), [0, 0, 1])


def test_attitude_error_antisymmetry():
    rng = np.random.default_rng(3)
    for _ in range(20):
        r1, r2 = random_rotation(rng), random_rotation(rng)
        assert np.allclose(attitude_error(r1, r2), -attitude_error(r2, r1))


def test_attitude_error_zero_iff_equal():
    rng = np.random.default_rng(4)
    for _ in range(50):
        r = random_rotation(rng)
        rd = random_rotation(rng, max_angle=0.99 * np.pi)
        err = attitude_error(r @ rd, r)
        angle = np.linalg.norm(log_so3(rd))
        if angle > 1e-6:
            assert np.linalg.norm(err) > 1e-8
    r = random_rotation(rng)
    assert np.allclose(attitude_error(r, r.copy()), 0.0, atol=1e-14)


def test_rot_x_matches_exp():
    assert np.allclose(rot_x(0.7), exp_so3([0.7, 0, 0]))


def test_project_to_so3():
    rng = np.random.default_rng(5)
    r = random_rotation(rng) + 1e-3 * rng.normal(size=(3, 3))
    p = project_to_so3(r)
    assert is_rotation(p)
