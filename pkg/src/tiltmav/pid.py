"""Benchmark PID controller emitting body-jerk commands.

Acceleration commands come from proportional/integral/derivative action on
the pose error (errors taken as reference minus state so positive gains are
stabilizing); jerk is their backward difference, with the linear part
rotated into the body frame. The first step returns zero jerk.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rigid_body import RigidBodyState
from .so3 import attitude_error
from .trajectory import TrajectorySample


@dataclass(frozen=True)
class PidGains:
    k_p: float = 5.0
    k_p_i: float = 0.3
    k_v: float = 1.0
    k_r: float = 3.5
    k_r_i: float = 0.3
    k_omega: float = 0.8

    @staticmethod
    def from_dict(d: dict) -> "PidGains":
        return PidGains(
            k_p=d.get("k_p", 5.0), k_p_i=d.get("k_p_i", 0.3), k_v=d.get("k_v", 1.0),
            k_r=d.get("k_r", 3.5), k_r_i=d.get("k_r_i", 0.3),
            k_omega=d.get("k_omega", 0.8),
        )


@dataclass
class PidController:
    """PID acceleration law with differenced jerk output.

    With ``j_max_lin``/``j_max_ang`` set, the differenced command is slew
    limited through an applied-acceleration tracker: the emitted jerk is
    still exactly the finite difference of the applied series, but a large
    command level is spread over several steps instead of one spike that
    downstream actuator-rate saturation would truncate and lose.
    """

    gains: PidGains = field(default_factory=PidGains)
    windup_p: float = 2.0
    windup_r: float = 1.0
    j_max_lin: float | None = None
    j_max_ang: float | None = None

    def __post_init__(self):
        self.reset()

    def reset(self) -> None:
        # Zero-acceleration history: engagement at equilibrium commands, so a
        # zero-error first step produces zero jerk while a pre-existing
        # offset is injected instead of silently rebased away.
        self.e_p_i = np.zeros(3)
        self.e_r_i = np.zeros(3)
        self._applied_a = np.zeros(3)
        self._applied_psi = np.zeros(3)

    def step(self, state: RigidBodyState, ref: TrajectorySample, dt: float) -> dict:
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        g = self.gains
        e_p = ref.p - state.p
        e_v = ref.v - state.v
        # attitude_error(R, Rd) is state-minus-reference; flip the arguments.
        e_r = attitude_error(ref.r_wb, state.r_wb)
        omega_ref_b = state.r_wb.T @ (ref.r_wb @ ref.omega_b)
        e_omega = omega_ref_b - state.omega
        self.e_p_i = np.clip(self.e_p_i + dt * e_p, -self.windup_p, self.windup_p)
        self.e_r_i = np.clip(self.e_r_i + dt * e_r, -self.windup_r, self.windup_r)

        # Reference feedforward on top of the PID action: without it the
        # soft position gains cannot follow multi-m/s^2 references at all.
        psi_ff = state.r_wb.T @ (ref.r_wb @ ref.psi_b)
        a_cmd = ref.a + g.k_p * e_p + g.k_v * e_v + g.k_p_i * self.e_p_i
        psi_cmd = psi_ff + g.k_r * e_r + g.k_omega * e_omega + g.k_r_i * self.e_r_i

        j_w = (a_cmd - self._applied_a) / dt
        zeta_b = (psi_cmd - self._applied_psi) / dt
        if self.j_max_lin is not None and np.abs(j_w).max() > self.j_max_lin:
            j_w = np.clip(j_w, -self.j_max_lin, self.j_max_lin)
            self._applied_a = self._applied_a + dt * j_w
        else:
            self._applied_a = a_cmd
        if self.j_max_ang is not None and np.abs(zeta_b).max() > self.j_max_ang:
            zeta_b = np.clip(zeta_b, -self.j_max_ang, self.j_max_ang)
            self._applied_psi = self._applied_psi + dt * zeta_b
        else:
            self._applied_psi = psi_cmd

        j_b = state.r_wb.T @ j_w
        return {
            "u": np.concatenate([j_b, zeta_b]),
            "a_cmd": self._applied_a.copy(),
            "psi_cmd": self._applied_psi.copy(),
            "a_target": a_cmd,
            "e_p": -e_p,   # logged in the state-minus-reference convention
            "e_r": -e_r,
        }
