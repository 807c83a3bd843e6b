import numpy as np
import pytest

from tiltmav.envelope import (envelope, force_efficiency, hover_sphere, icosphere,
                              max_wrench_in_direction, min_total_thrust, pinv_radii,
                              min_radius, sample_directions, support_values,
                              torque_efficiency)
from tiltmav.vehicle import GRAVITY, RotorParams, hexarotor, prototype_morphology

from oracles import max_wrench_alpha_grid


def test_icosphere_counts():
    verts, faces = icosphere(0)
    assert verts.shape == (12, 3) and faces.shape == (20, 3)
    verts, faces = icosphere(3)
    assert faces.shape == (1280, 3)
    assert np.allclose(np.linalg.norm(verts, axis=1), 1.0)


def test_synthetic_sphere_volume():
    m = prototype_morphology()
    rho = 2.5
    metrics = envelope(m, n_dirs=1280, radial_fn=lambda d: rho)
    exact = 4.0 / 3.0 * np.pi * rho**3
    assert abs(metrics.volume - exact) / exact < 0.02
    assert metrics.min == metrics.max == rho


def test_thrust_budget_along_z():
    m = prototype_morphology()
    expected = 12 * m.rotor.c_f * m.rotor.omega_max**2
    val = max_wrench_in_direction(m, [0.0, 0.0, 1.0])
    assert abs(val - expected) < 1e-6
    # tilt symmetry alpha -> pi - alpha
    val_down = max_wrench_in_direction(m, [0.0, 0.0, -1.0])
    assert abs(val_down - expected) < 1e-6


def test_rotational_symmetry_of_radial_values():
    m = prototype_morphology()
    from tiltmav.so3 import rot_z
    d = np.array([0.8, 0.1, 0.59160798])
    d /= np.linalg.norm(d)
    v1 = max_wrench_in_direction(m, d)
    v2 = max_wrench_in_direction(m, rot_z(np.pi / 3.0) @ d)
    assert abs(v1 - v2) / v1 < 1e-6


def test_optimal_matches_alpha_grid_oracle():
    # 3 dual-rotor arms keep the oracle grid tractable.
    m = hexarotor()
    arms = m.arms[::2]
    arms = tuple(type(a)(index=i, gamma=a.gamma, theta=a.theta, beta=a.beta,
                         length=a.length, spins=a.spins) for i, a in enumerate(arms))
    from tiltmav.vehicle import Morphology
    m3 = Morphology(arms=arms, rotor=m.rotor, tilt=m.tilt, body=m.body)
    for d in ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.6, 0.0, 0.8]):
        mine = max_wrench_in_direction(m3, d)
        oracle = max_wrench_alpha_grid(m3, d, n_grid=12, refine=2)
        assert abs(mine - oracle) / max(oracle, 1e-12) < 0.01, (d, mine, oracle)


def test_pinv_envelope_ratio_flat_hex():
    m = hexarotor(body=prototype_morphology().body)
    metrics = envelope(m, n_dirs=1280)
    ratio = metrics.max / metrics.min
    assert abs(ratio - 2.0) < 0.2
    assert metrics.min <= metrics.mean <= metrics.max


def test_envelope_volume_monotone_in_omega_max():
    vols = []
    for omega_max in (900.0, 1100.0, 1250.0):
        m = hexarotor(rotor=RotorParams(omega_max=omega_max))
        vols.append(envelope(m, n_dirs=320).volume)
    assert vols[0] < vols[1] < vols[2]


def test_support_and_radial_agree_on_minimum():
    m = prototype_morphology()
    dirs, _, _ = sample_directions(320)
    sup = support_values(m, dirs)
    blocks_min = min_radius(m, n_dirs=320, allocation="optimal")
    assert abs(sup.min() - blocks_min) / blocks_min < 0.01
    # support function dominates the radial value along each direction
    for d in dirs[::40]:
        radial = max_wrench_in_direction(m, d, n_polygon=64)
        h = support_values(m, d)[0]
        assert h >= radial - 1e-6 * abs(h)


def test_force_efficiency_examples():
    assert np.isclose(force_efficiency([0, 0, 3.0], [1.0, 1.0, 1.0]), 1.0)
    # two opposing 1 N thrusts plus 1 N aligned: eta = 1/3
    assert np.isclose(force_efficiency([1.0, 0, 0], [1.0, 1.0, 1.0]), 1.0 / 3.0)
    with pytest.raises(ValueError):
        force_efficiency([1, 0, 0], [0.0, 0.0])
    with pytest.raises(ValueError):
        force_efficiency([1, 0, 0], [-1.0, 2.0])


def test_torque_efficiency_examples():
    # couple of two tangential 1 N thrusts at radius l: tau = 2 l, sum = 2
    length = 0.3
    assert np.isclose(torque_efficiency([0, 0, 2 * length], [1.0, 1.0], length), 1.0)
    assert np.isclose(torque_efficiency([0, 0, 0.15], [1.0, 1.0], length), 0.25)
    with pytest.raises(ValueError):
        torque_efficiency([1, 0, 0], [0.0], length)


def test_efficiency_bounds_random():
    rng = np.random.default_rng(11)
    for _ in range(200):
        thrust_vecs = rng.normal(size=(6, 3))
        mags = np.linalg.norm(thrust_vecs, axis=1)
        f_net = thrust_vecs.sum(axis=0)
        eta = force_efficiency(f_net, mags)
        assert 0.0 <= eta <= 1.0 + 1e-12


def test_hover_sphere_flat_hex():
    m = hexarotor(body=prototype_morphology().body)
    sphere = hover_sphere(m, n_dirs=320)
    assert sphere["feasible"].all()       # f_min well above mg
    # best-case efficiency along +-z is 1 (aligned thrusts)
    z_idx = np.argmax(sphere["directions"] @ np.array([0, 0, 1.0]))
    assert sphere["eta_f"][z_idx] > 0.999
    assert np.all(sphere["eta_f"] <= 1.0 + 1e-12)


def test_min_total_thrust_infeasible():
    m = prototype_morphology()
    # far beyond the envelope
    assert np.isinf(min_total_thrust(m, [0, 0, 1e5, 0, 0, 0]))


def test_hover_sphere_thrust_deficient():
    rotor = RotorParams(omega_max=1250.0 / 4.0)
    m = hexarotor(rotor=rotor, body=prototype_morphology().body)
    sphere = hover_sphere(m, n_dirs=320)
    assert not sphere["feasible"].all()


def test_pinv_radii_torque_mode_hover_budget():
    m = hexarotor(body=prototype_morphology().body)
    mg = m.body.mass * GRAVITY
    vals = pinv_radii(m, np.array([[0.0, 0.0, 1.0]]), mode="torque",
                      hover_force=[0.0, 0.0, mg])
    assert vals[0] > 0.0
    # hover alone infeasible -> zero radius
    vals = pinv_radii(m, np.array([[0.0, 0.0, 1.0]]), mode="torque",
                      hover_force=[0.0, 0.0, 1e5])
    assert vals[0] == 0.0


def test_envelope_requires_enough_directions():
    with pytest.raises(ValueError):
        envelope(prototype_morphology(), n_dirs=50)


def test_envelope_eta_sampled():
    m = hexarotor(body=prototype_morphology().body)
    metrics = envelope(m, n_dirs=320)
    assert metrics.eta.shape == metrics.values.shape
    assert np.all(metrics.eta >= 0.0) and np.all(metrics.eta <= 1.0 + 1e-12)
    # near-vertical directions approach perfect efficiency; exactly on the
    # axis all thrusts align and the index is 1
    z_idx = np.argmax(metrics.directions @ np.array([0.0, 0.0, 1.0]))
    assert metrics.eta[z_idx] > 0.98
    _, eta_exact = pinv_radii(m, np.array([[0.0, 0.0, 1.0]]), return_eta=True)
    assert np.isclose(eta_exact[0], 1.0)
