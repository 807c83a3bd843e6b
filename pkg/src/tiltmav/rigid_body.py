"""Newton-Euler rigid-body dynamics and first-order tilt response."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .so3 import is_rotation
from .vehicle import RigidBodyParams


@dataclass
class RigidBodyState:
    """Pose, twist, and accelerations. p/v/a in world frame, omega/psi in body."""

    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    r_wb: np.ndarray = field(default_factory=lambda: np.eye(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    psi: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self) -> "RigidBodyState":
        return RigidBodyState(self.p.copy(), self.v.copy(), self.a.copy(),
                              self.r_wb.copy(), self.omega.copy(), self.psi.copy())

    def validate(self) -> None:
        for name in ("p", "v", "a", "omega", "psi"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite state field {name}")
        if not is_rotation(self.r_wb, tol=1e-6):
            raise ValueError("attitude left SO(3)")


@dataclass(frozen=True)
class Wrench:
    force: np.ndarray
    torque: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float))
        object.__setattr__(self, "torque", np.asarray(self.torque, dtype=float))
        if not (np.all(np.isfinite(self.force)) and np.all(np.isfinite(self.torque))):
            raise ValueError("wrench must be finite")

    @staticmethod
    def from_vector(w) -> "Wrench":
        w = np.asarray(w, dtype=float)
        return Wrench(w[:3], w[3:])

    def vector(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])


def eom_forward(state: RigidBodyState, wrench: Wrench,
                params: RigidBodyParams) -> tuple[np.ndarray, np.ndarray]:
    """Body-frame accelerations from the Newton-Euler equations.

        m vdot_B = -omega x (m v_B) + f_B + m g_B
        J wdot_B = -omega x (J omega) + tau_B

    Returns (vdot_B, omegadot_B).
    """
    r = state.r_wb
    omega = state.omega
    v_b = r.T @ state.v
    g_b = r.T @ params.gravity_w
    v_dot = (-np.cross(omega, params.mass * v_b) + wrench.force) / params.mass + g_b
    j_omega = params.inertia @ omega
    try:
        omega_dot = np.linalg.solve(params.inertia, -np.cross(omega, j_omega) + wrench.torque)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular inertia matrix") from exc
    return v_dot, omega_dot


def accelerations(state: RigidBodyState, wrench: Wrench,
                  params: RigidBodyParams) -> tuple[np.ndarray, np.ndarray]:
    """World-frame linear acceleration and body-frame angular acceleration."""
    r = state.r_wb
    a_w = r @ (wrench.force / params.mass) + params.gravity_w
    j_omega = params.inertia @ state.omega
    psi = np.linalg.solve(params.inertia, -np.cross(state.omega, j_omega) + wrench.torque)
    return a_w, psi


def tilt_step(alpha: np.ndarray, alpha_ref: np.ndarray, tau: float, dt: float) -> np.ndarray:
    """Exact step of the first-order tilt dynamics alphadot = (ref - alpha)/tau."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    decay = np.exp(-dt / tau)
    return alpha_ref + (np.asarray(alpha, dtype=float) - alpha_ref) * decay


def kinetic_energy(state: RigidBodyState, params: RigidBodyParams) -> float:
    v_b = state.r_wb.T @ state.v
    return float(0.5 * params.mass * v_b @ v_b + 0.5 * state.omega @ params.inertia @ state.omega)
