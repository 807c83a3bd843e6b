"""Jerk-level LQR-with-integrators controller.

The 24-state tracking error stacks, in order, position, position integral,
velocity, and acceleration errors (world frame) and attitude, attitude
integral, angular velocity, and angular acceleration errors (body frame).
Feedback linearization turns the force/torque derivative commands into a
virtual input u_bar that renders the error dynamics a pair of integrator
chains; the constant (A, B) pair below is that linearization evaluated at
zero attitude error, and the gain comes from the associated CARE.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .riccati import lqr_gain, solve_care
from .rigid_body import RigidBodyState
from .so3 import attitude_error
from .trajectory import TrajectorySample
from .vehicle import RigidBodyParams

N_ERR = 24
BLOCKS = ("p", "p_i", "v", "a", "R", "R_i", "omega", "psi")
STABILITY_COEFF = (3.0 + np.sqrt(2.0)) / np.sqrt(2.0)


@dataclass(frozen=True)
class LqriGains:
    """Diagonal weighting gains; defaults are the experimental values."""

    k_p: float = 200.0
    k_p_i: float = 50.0
    k_v: float = 100.0
    k_a: float = 0.0
    k_r: float = 100.0
    k_r_i: float = 100.0
    k_omega: float = 200.0
    k_psi: float = 0.0
    r_f_dot: tuple = (1.0, 1.0, 0.2)
    r_tau_dot: tuple = (1.0, 1.0, 1.0)

    def weight_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        q_diag = np.concatenate([
            np.full(3, g) for g in (self.k_p, self.k_p_i, self.k_v, self.k_a,
                                    self.k_r, self.k_r_i, self.k_omega, self.k_psi)
        ])
        if np.any(q_diag < 0.0):
            raise ValueError("Q gains must be non-negative")
        r_diag = np.concatenate([np.asarray(self.r_f_dot, dtype=float),
                                 np.asarray(self.r_tau_dot, dtype=float)])
        if np.any(r_diag <= 0.0):
            raise ValueError("R weights must be positive")
        return np.diag(q_diag), np.diag(r_diag)

    @staticmethod
    def from_dict(d: dict) -> "LqriGains":
        return LqriGains(
            k_p=d.get("k_p", 200.0), k_p_i=d.get("k_p_i", 50.0),
            k_v=d.get("k_v", 100.0), k_a=d.get("k_a", 0.0),
            k_r=d.get("k_r", 100.0), k_r_i=d.get("k_r_i", 100.0),
            k_omega=d.get("k_omega", 200.0), k_psi=d.get("k_psi", 0.0),
            r_f_dot=tuple(d.get("r_f_dot", (1.0, 1.0, 0.2))),
            r_tau_dot=tuple(d.get("r_tau_dot", (1.0, 1.0, 1.0))),
        )


@dataclass
class ErrorState:
    e_p: np.ndarray
    e_p_i: np.ndarray
    e_v: np.ndarray
    e_a: np.ndarray
    e_r: np.ndarray
    e_r_i: np.ndarray
    e_omega: np.ndarray
    e_psi: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([self.e_p, self.e_p_i, self.e_v, self.e_a,
                               self.e_r, self.e_r_i, self.e_omega, self.e_psi])


def linearized_system() -> tuple[np.ndarray, np.ndarray]:
    """Constant (A, B) of the feedback-linearized error dynamics.

    Six identity blocks chain p <- v <- a, the position integral, R <- omega
    <- psi, and the attitude integral; the virtual input enters at the
    acceleration and angular-acceleration rows.
    """
    a = np.zeros((N_ERR, N_ERR))
    eye = np.eye(3)
    idx = {name: slice(3 * i, 3 * i + 3) for i, name in enumerate(BLOCKS)}
    a[idx["p"], idx["v"]] = eye
    a[idx["p_i"], idx["p"]] = eye
    a[idx["v"], idx["a"]] = eye
    a[idx["R"], idx["omega"]] = eye
    a[idx["R_i"], idx["R"]] = eye
    a[idx["omega"], idx["psi"]] = eye
    b = np.zeros((N_ERR, 6))
    b[idx["a"], 0:3] = eye
    b[idx["psi"], 3:6] = eye
    return a, b


def _check_detectable(a: np.ndarray, q: np.ndarray) -> None:
    """PBH test at the origin (A is nilpotent, so 0 is the only eigenvalue)."""
    c = np.sqrt(np.clip(np.diag(q), 0.0, None))
    stacked = np.vstack([a, np.diag(c)])
    if np.linalg.matrix_rank(stacked, tol=1e-12) < a.shape[0]:
        raise ValueError("(A, Q^1/2) not detectable: zero-gain states unobservable")


def compute_error_state(
    state: RigidBodyState,
    ref: TrajectorySample,
    e_p_i: np.ndarray,
    e_r_i: np.ndarray,
    prev_e_p: np.ndarray | None,
    prev_e_r: np.ndarray | None,
    dt: float,
    windup_p: float = 2.0,
    windup_r: float = 1.0,
) -> tuple[ErrorState, np.ndarray, np.ndarray]:
    """Tracking error with trapezoidal, clamped integrator updates.

    Returns (error, new e_p_i, new e_r_i); pass prev errors as None on the
    first step to seed the trapezoid.
    """
    r = state.r_wb
    e_p = state.p - ref.p
    e_v = state.v - ref.v
    e_a = state.a - ref.a
    e_r = attitude_error(r, ref.r_wb)
    omega_ref_w = ref.r_wb @ ref.omega_b
    psi_ref_w = ref.r_wb @ ref.psi_b
    e_omega = state.omega - r.T @ omega_ref_w
    e_psi = state.psi - r.T @ psi_ref_w

    prev_e_p = e_p if prev_e_p is None else prev_e_p
    prev_e_r = e_r if prev_e_r is None else prev_e_r
    e_p_i = np.clip(e_p_i + 0.5 * dt * (prev_e_p + e_p), -windup_p, windup_p)
    e_r_i = np.clip(e_r_i + 0.5 * dt * (prev_e_r + e_r), -windup_r, windup_r)
    err = ErrorState(e_p, e_p_i.copy(), e_v, e_a, e_r, e_r_i.copy(), e_omega, e_psi)
    return err, e_p_i, e_r_i


def feedback_linearize(
    u_bar: np.ndarray,
    state: RigidBodyState,
    ref: TrajectorySample,
    params: RigidBodyParams,
    force_b: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Force/torque derivative commands cancelling the jerk-level couplings.

    The returned pair (f_dot, tau_dot), pushed through the rigid-body jerk
    dynamics, leaves e_a_dot = u_bar[0:3] (world frame) and
    e_psi_dot = u_bar[3:6] (body frame).
    """
    r = state.r_wb
    r_bw = r.T
    omega = state.omega
    psi = state.psi
    j = params.inertia
    m = params.mass

    g_b = r_bw @ (m * params.gravity_w)
    f_dot = np.cross(omega, g_b) + m * (r_bw @ (ref.j + u_bar[0:3]))

    omega_d_b = r_bw @ (ref.r_wb @ ref.omega_b)
    psi_d_b = r_bw @ (ref.r_wb @ ref.psi_b)
    zeta_d_b = r_bw @ (ref.r_wb @ ref.zeta_b)
    j_omega = j @ omega
    tau_dot = (
        np.cross(np.cross(omega, params.r_com), force_b)
        + np.cross(params.r_com, f_dot)
        + 2.0 * np.cross(omega, j @ psi)
        + np.cross(psi, j_omega)
        + np.cross(omega, np.cross(omega, j_omega))
        + j @ (
            -np.cross(omega, psi)
            - np.cross(psi, omega_d_b)
            + np.cross(omega, np.cross(omega, omega_d_b))
            - 2.0 * np.cross(omega, psi_d_b)
            + zeta_d_b
            + u_bar[3:6]
        )
    )
    return f_dot, tau_dot


def plant_jerk_errors(
    f_dot: np.ndarray,
    tau_dot: np.ndarray,
    state: RigidBodyState,
    ref: TrajectorySample,
    params: RigidBodyParams,
    force_b: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Error-acceleration derivatives produced by the plant jerk dynamics.

    Independent of ``feedback_linearize``: this is the expanded error
    dynamics of the differentiated Newton-Euler model, used to verify the
    cancellation identity.
    """
    r = state.r_wb
    r_bw = r.T
    omega = state.omega
    psi = state.psi
    j = params.inertia
    m = params.mass

    g_b = r_bw @ (m * params.gravity_w)
    e_a_dot = (r @ (f_dot - np.cross(omega, g_b))) / m - ref.j

    omega_d_b = r_bw @ (ref.r_wb @ ref.omega_b)
    psi_d_b = r_bw @ (ref.r_wb @ ref.psi_b)
    zeta_d_b = r_bw @ (ref.r_wb @ ref.zeta_b)
    j_omega = j @ omega
    e_psi_dot = (
        np.linalg.solve(j, tau_dot
                        - np.cross(np.cross(omega, params.r_com), force_b)
                        - np.cross(params.r_com, f_dot)
                        - 2.0 * np.cross(omega, j @ psi)
                        - np.cross(psi, j_omega)
                        - np.cross(omega, np.cross(omega, j_omega)))
        + np.cross(omega, psi)
        + np.cross(psi, omega_d_b)
        - np.cross(omega, np.cross(omega, omega_d_b))
        + 2.0 * np.cross(omega, psi_d_b)
        - zeta_d_b
    )
    return e_a_dot, e_psi_dot


def stability_condition(q, r, p, b, e_vec, e_omega) -> tuple[float, float, bool]:
    """Sufficient asymptotic-stability test of the Lyapunov analysis.

    lhs = (3 + sqrt 2)/sqrt 2 * ||e_omega|| / ||e||;
    rhs = lambda_min(Q + P B R^-1 B' P) / (2 ||P||). ||e|| = 0 counts as
    satisfied (limit convention).
    """
    rhs = stability_rhs(q, r, p, b)
    e_norm = float(np.linalg.norm(e_vec))
    if e_norm == 0.0:
        return 0.0, rhs, True
    lhs = STABILITY_COEFF * float(np.linalg.norm(e_omega)) / e_norm
    return lhs, rhs, lhs < rhs


def stability_rhs(q, r, p, b) -> float:
    m = q + p @ b @ np.linalg.solve(r, b.T @ p)
    lam_min = float(np.linalg.eigvalsh(0.5 * (m + m.T)).min())
    p_norm = float(np.linalg.norm(p, 2))
    return lam_min / (2.0 * p_norm)


@dataclass
class LqriController:
    """Stateful wrapper: integrators plus the precomputed CARE gain."""

    params: RigidBodyParams
    gains: LqriGains = field(default_factory=LqriGains)
    u_clamp: float | None = None
    recompute_gain_each_step: bool = False
    windup_p: float = 2.0
    windup_r: float = 1.0

    def __post_init__(self):
        self.a_sys, self.b_sys = linearized_system()
        self.q, self.r = self.gains.weight_matrices()
        _check_detectable(self.a_sys, self.q)
        self.p_care = solve_care(self.a_sys, self.b_sys, self.q, self.r)
        self.k = lqr_gain(self.p_care, self.b_sys, self.r)
        self._stab_rhs = stability_rhs(self.q, self.r, self.p_care, self.b_sys)
        self.reset()

    def reset(self) -> None:
        self.e_p_i = np.zeros(3)
        self.e_r_i = np.zeros(3)
        self._prev_e_p: np.ndarray | None = None
        self._prev_e_r: np.ndarray | None = None

    def step(self, state: RigidBodyState, ref: TrajectorySample, force_b: np.ndarray,
             dt: float) -> dict:
        """One control tick: error state, virtual input, wrench-rate command."""
        err, self.e_p_i, self.e_r_i = compute_error_state(
            state, ref, self.e_p_i, self.e_r_i, self._prev_e_p, self._prev_e_r,
            dt, self.windup_p, self.windup_r)
        self._prev_e_p = err.e_p
        self._prev_e_r = err.e_r
        if self.recompute_gain_each_step:
            self.p_care = solve_care(self.a_sys, self.b_sys, self.q, self.r)
            self.k = lqr_gain(self.p_care, self.b_sys, self.r)
        e_vec = err.vector()
        u_bar = -self.k @ e_vec
        if self.u_clamp is not None:
            u_bar = np.clip(u_bar, -self.u_clamp, self.u_clamp)
        f_dot, tau_dot = feedback_linearize(u_bar, state, ref, self.params, force_b)
        e_norm = float(np.linalg.norm(e_vec))
        lhs = (STABILITY_COEFF * float(np.linalg.norm(err.e_omega)) / e_norm
               if e_norm > 0.0 else 0.0)
        return {
            "u_bar": u_bar,
            "wrench_rate": np.concatenate([f_dot, tau_dot]),
            "error": err,
            "stability_lhs": lhs,
            "stability_rhs": self._stab_rhs,
            "stability_ok": lhs < self._stab_rhs,
        }
