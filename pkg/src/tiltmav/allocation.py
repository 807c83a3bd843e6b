"""Static, instantaneous, and inverse actuator allocation.

The static allocation matrix A maps the interleaved lateral/vertical
components of the squared rotor speeds,

    omega_tilde = [sin(a_1) W_1, cos(a_1) W_1, ..., sin(a_n) W_n, cos(a_n) W_n],

to the body wrench [f; tau]. It depends only on the geometry, not on the
tilt angles. The instantaneous matrix A_alpha folds the current tilt angles
in, mapping squared rotor speeds directly to the wrench.
"""

from __future__ import annotations

import numpy as np

from .vehicle import Morphology, RotorParams

#: Relative sigma_min threshold below which the condition number saturates.
RANK_EPS = 1e-12


def rotor_wrench(omega_i: float, params: RotorParams) -> tuple[float, float]:
    """Thrust and drag-torque magnitude of one rotor at speed omega_i."""
    if omega_i < 0.0:
        raise ValueError("rotor speed must be non-negative")
    thrust = params.c_f * omega_i**2
    return thrust, params.c_m * omega_i**2


def static_allocation(m: Morphology) -> np.ndarray:
    """Static allocation matrix, 6 x (2 * n_rotors).

    Column 2r is the lateral component of rotor r, column 2r+1 the vertical
    one. Force rows are the thrust directions scaled by c_f; torque rows
    combine the moment of the thrust applied at the rotor position with the
    drag torque along the thrust axis (sign per rotor spin).
    """
    c_f = m.rotor.c_f
    c_d = m.rotor.c_d
    a = np.zeros((6, 2 * m.n_rotors))
    for r in range(m.n_rotors):
        arm = m.arms[int(m.arm_of_rotor[r])]
        spin = m.spins[r]
        lat = arm.lateral_dir()
        vert = arm.vertical_dir()
        pos = arm.length * arm.axis()
        a[:3, 2 * r] = c_f * lat
        a[3:, 2 * r] = c_f * (np.cross(pos, lat) - spin * c_d * lat)
        a[:3, 2 * r + 1] = c_f * vert
        a[3:, 2 * r + 1] = c_f * (np.cross(pos, vert) - spin * c_d * vert)
    return a


def omega_tilde(omega_sq: np.ndarray, alpha: np.ndarray, arm_of_rotor: np.ndarray) -> np.ndarray:
    """Interleaved lateral/vertical squared-speed components (Omega-tilde)."""
    omega_sq = np.asarray(omega_sq, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    arm_of_rotor = np.asarray(arm_of_rotor)
    if omega_sq.shape != arm_of_rotor.shape:
        raise ValueError("omega_sq and arm_of_rotor length mismatch")
    if arm_of_rotor.size and int(arm_of_rotor.max()) >= alpha.size:
        raise ValueError("alpha too short for the rotor->arm map")
    a_r = alpha[arm_of_rotor]
    out = np.empty(2 * omega_sq.size)
    out[0::2] = np.sin(a_r) * omega_sq
    out[1::2] = np.cos(a_r) * omega_sq
    return out


def instantaneous_allocation(a: np.ndarray, alpha: np.ndarray, arm_of_rotor: np.ndarray) -> np.ndarray:
    """Tilt-dependent allocation A_alpha with A_alpha @ W == A @ omega_tilde(W, alpha)."""
    alpha = np.asarray(alpha, dtype=float)
    a_r = alpha[np.asarray(arm_of_rotor)]
    return a[:, 0::2] * np.sin(a_r) + a[:, 1::2] * np.cos(a_r)


def wrench_from_actuators(a: np.ndarray, omega: np.ndarray, alpha: np.ndarray,
                          arm_of_rotor: np.ndarray) -> np.ndarray:
    """Body wrench for rotor speeds omega (rad/s) and tilt angles alpha."""
    return a @ omega_tilde(np.asarray(omega, dtype=float) ** 2, alpha, arm_of_rotor)


def condition_number(a_alpha: np.ndarray) -> float:
    """sigma_max / sigma_min of the instantaneous allocation; inf at rank loss."""
    s = np.linalg.svd(np.asarray(a_alpha, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return np.inf
    smin = s.min()
    if smin < RANK_EPS * s[0]:
        return np.inf
    return float(s[0] / smin)


def invert_static(a: np.ndarray, wrench: np.ndarray, m: Morphology,
                  alpha_hold: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimum-norm actuator set realizing a wrench through the static map.

    Returns (alpha, omega, omega_tilde_star). Tilt angles come from the
    per-arm atan2 of the summed lateral/vertical components of the
    pseudoinverse solution; arms whose demanded thrust is negligible keep
    alpha_hold (or 0). Rotor speeds are then re-solved at the shared tilt
    angles, which restores wrench exactness the per-rotor pairs lose to the
    drag-sign asymmetry within an arm.
    """
    wrench = np.asarray(wrench, dtype=float)
    wt = np.linalg.pinv(a) @ wrench
    lat = wt[0::2]
    vert = wt[1::2]

    n_arms = m.n_arms
    rpa = m.rotor.rotors_per_arm
    alpha = np.zeros(n_arms) if alpha_hold is None else np.array(alpha_hold, dtype=float)
    scale = max(np.abs(wt).max(), 1.0)
    for arm in range(n_arms):
        sl = slice(arm * rpa, (arm + 1) * rpa)
        lat_sum = lat[sl].sum()
        vert_sum = vert[sl].sum()
        if np.hypot(lat_sum, vert_sum) > 1e-12 * scale:
            alpha[arm] = np.arctan2(lat_sum, vert_sum)

    a_inst = instantaneous_allocation(a, alpha, m.arm_of_rotor)
    omega_sq = np.linalg.pinv(a_inst) @ wrench
    omega = np.sqrt(np.clip(omega_sq, 0.0, None))
    return alpha, omega, wt
