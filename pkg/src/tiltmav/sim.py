"""Deterministic closed-loop simulation of the tiltrotor vehicle.

The plant integrates the rigid body with classical RK4 (exponential-map
attitude update) at dt_physics while tilt angles follow their exact
first-order response and rotor speeds slew toward the references. The
controller and differential allocation run at dt_control with zero-order
hold in between. Acceleration feedback defaults to ground truth; the
Savitzky-Golay estimator path is opt-in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .allocation import instantaneous_allocation, invert_static, static_allocation
from .diff_allocation import (AllocationConfig, BiasConfig, DifferentialAllocator,
                              exact_wrench_rate)
from .lqri import LqriController, LqriGains
from .pid import PidController, PidGains
from .rigid_body import RigidBodyState, Wrench, accelerations
from .sgfilter import SavitzkyGolay
from .simlog import SimLog
from .so3 import exp_so3, project_to_so3
from .trajectory import Trajectory
from .vehicle import Morphology


class SimulationDiverged(RuntimeError):
    def __init__(self, t: float, log: "SimLog"):
        super().__init__(f"position error exceeded the divergence limit at t={t:.3f}s")
        self.t = t
        self.log = log


@dataclass(frozen=True)
class SimConfig:
    dt_physics: float = 1e-3
    dt_control: float = 1e-2
    controller: str = "pid"
    seed: int = 0
    sigma_a: float = 0.0
    sigma_omega: float = 0.0
    use_estimator: bool = False
    sg_window: int = 21
    sg_order: int = 1
    rotor_slew: float = 1e4
    divergence_limit: float = 10.0
    log_every_control_step: int = 1

    def __post_init__(self):
        if self.dt_physics > self.dt_control:
            raise ValueError("dt_physics must not exceed dt_control")
        if self.sg_window % 2 == 0:
            raise ValueError("sg_window must be odd")
        ratio = self.dt_control / self.dt_physics
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("dt_control must be an integer multiple of dt_physics")


@dataclass
class Plant:
    """Physical vehicle: rigid body plus actuator states."""

    morphology: Morphology
    state: RigidBodyState = field(default_factory=RigidBodyState)
    alpha: np.ndarray = None
    omega: np.ndarray = None
    rotor_slew: float = 1e4

    def __post_init__(self):
        m = self.morphology
        if self.alpha is None:
            self.alpha = np.zeros(m.n_arms)
        if self.omega is None:
            self.omega = np.zeros(m.n_rotors)
        self._a = static_allocation(m)
        self._arm_of_rotor = m.arm_of_rotor
        self._renorm_counter = 0

    def wrench(self) -> Wrench:
        a_inst = instantaneous_allocation(self._a, self.alpha, self._arm_of_rotor)
        w = a_inst @ self.omega**2
        return Wrench(w[:3], w[3:])

    def refresh_accelerations(self) -> None:
        a_w, psi = accelerations(self.state, self.wrench(), self.morphology.body)
        self.state.a = a_w
        self.state.psi = psi

    def step(self, alpha_ref: np.ndarray, omega_ref: np.ndarray, dt: float) -> None:
        """Advance actuators and rigid body by dt (RK4, exp-map attitude)."""
        m = self.morphology
        tau = m.tilt.tau
        # Actuators move first; the step uses their midpoint wrench.
        alpha_mid = alpha_ref + (self.alpha - alpha_ref) * np.exp(-0.5 * dt / tau)
        alpha_end = alpha_ref + (self.alpha - alpha_ref) * np.exp(-dt / tau)
        d_omega = np.clip(omega_ref - self.omega, -self.rotor_slew * dt, self.rotor_slew * dt)
        omega_mid = self.omega + 0.5 * d_omega
        omega_end = self.omega + d_omega
        w_mid = instantaneous_allocation(self._a, alpha_mid, self._arm_of_rotor) @ omega_mid**2
        force_b, tau_b = w_mid[:3], w_mid[3:]

        body = m.body
        mass, inertia = body.mass, body.inertia
        g_w = body.gravity_w
        r0 = self.state.r_wb

        def deriv(y):
            # y = [p, v, rotation increment, omega]
            delta, omega = y[6:9], y[9:12]
            r = r0 @ exp_so3(delta)
            acc = r @ (force_b / mass) + g_w
            omega_dot = np.linalg.solve(inertia, tau_b - np.cross(omega, inertia @ omega))
            return np.concatenate([y[3:6], acc, omega, omega_dot])

        y0 = np.concatenate([self.state.p, self.state.v, np.zeros(3), self.state.omega])
        k1 = deriv(y0)
        k2 = deriv(y0 + 0.5 * dt * k1)
        k3 = deriv(y0 + 0.5 * dt * k2)
        k4 = deriv(y0 + dt * k3)
        y1 = y0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        self.state.p = y1[0:3]
        self.state.v = y1[3:6]
        self.state.r_wb = r0 @ exp_so3(y1[6:9])
        self.state.omega = y1[9:12]
        self.alpha = alpha_end
        self.omega = omega_end
        self._renorm_counter += 1
        if self._renorm_counter % 256 == 0:
            self.state.r_wb = project_to_so3(self.state.r_wb)
        if not np.all(np.isfinite(y1)):
            raise FloatingPointError(f"non-finite plant state: {y1}")
        self.refresh_accelerations()


def hover_trim(m: Morphology, r_wb=None) -> tuple[np.ndarray, np.ndarray]:
    """(alpha, omega) holding the vehicle static at attitude r_wb."""
    r = np.eye(3) if r_wb is None else np.asarray(r_wb, dtype=float)
    f_b = -m.body.mass * (r.T @ m.body.gravity_w)
    wrench = np.concatenate([f_b, np.zeros(3)])
    alpha, omega, _ = invert_static(static_allocation(m), wrench, m)
    return alpha, omega


def _make_controller(config: SimConfig, m: Morphology, gains: dict | None):
    gains = gains or {}
    if config.controller == "lqri":
        return LqriController(m.body, LqriGains.from_dict(gains.get("lqri", {})))
    if config.controller == "pid":
        pid = gains.get("pid", {})
        # Slew-limited differencing keeps command levels inside the actuator
        # rate budget (one-tick spikes would be truncated and lost).
        return PidController(PidGains.from_dict(pid),
                             j_max_lin=pid.get("j_max_lin", 10.0),
                             j_max_ang=pid.get("j_max_ang", 60.0))
    raise ValueError(f"unknown controller {config.controller!r}")


def run(
    config: SimConfig,
    morphology: Morphology,
    trajectory: Trajectory,
    gains: dict | None = None,
    alloc: AllocationConfig | None = None,
    bias: BiasConfig | None = None,
    unwind: bool = False,
    alpha0: np.ndarray | None = None,
    p_offset=None,
    raise_on_divergence: bool = False,
) -> SimLog:
    """Closed-loop simulation of a trajectory; returns the control-rate log.

    ``alpha0`` overrides the trim tilt-angle commands (e.g. wound-up arms at
    2 pi); ``p_offset`` displaces the initial position for step-recovery
    studies. Divergence (position error beyond the configured limit) stops
    the run and returns the partial log flagged as diverged, or raises when
    ``raise_on_divergence`` is set.
    """
    rng = np.random.default_rng(config.seed)
    ref0 = trajectory.sample(trajectory.t0)
    alpha_trim, omega_trim = hover_trim(morphology, ref0.r_wb)
    if alpha0 is not None:
        alpha_trim = np.asarray(alpha0, dtype=float)

    plant = Plant(morphology, rotor_slew=config.rotor_slew)
    plant.state.p = ref0.p + (0.0 if p_offset is None else np.asarray(p_offset, dtype=float))
    plant.state.r_wb = ref0.r_wb.copy()
    plant.alpha = alpha_trim.copy()
    plant.omega = omega_trim.copy()
    plant.refresh_accelerations()

    controller = _make_controller(config, morphology, gains)
    allocator = DifferentialAllocator(
        morphology, alloc or AllocationConfig(), bias or BiasConfig(), unwind=unwind)
    allocator.set_commands(alpha_trim, omega_trim)

    estimator_a = SavitzkyGolay(config.sg_window, config.sg_order)
    estimator_w = SavitzkyGolay(config.sg_window, config.sg_order)

    log = SimLog(morphology.n_arms, morphology.n_rotors)
    steps_per_tick = int(round(config.dt_control / config.dt_physics))
    n_ticks = max(int(round(trajectory.duration / config.dt_control)), 0) + 1
    c_f = morphology.rotor.c_f
    is_lqri = config.controller == "lqri"

    alpha_ref, omega_ref = alpha_trim.copy(), omega_trim.copy()
    diverged = False
    for tick in range(n_ticks):
        t = trajectory.t0 + tick * config.dt_control
        ref = trajectory.sample(t)

        est_state = plant.state.copy()
        if config.use_estimator:
            a_meas = plant.state.a + rng.normal(0.0, config.sigma_a, 3)
            w_meas = plant.state.omega + rng.normal(0.0, config.sigma_omega, 3)
            estimator_a.push(a_meas)
            estimator_w.push(w_meas)
            est_state.a = estimator_a.value()
            est_state.omega = estimator_w.value()
            est_state.psi = estimator_w.derivative(config.dt_control)

        wrench_cmd = allocator.current_wrench()
        r_t = est_state.r_wb.T
        if is_lqri:
            out = controller.step(est_state, ref, wrench_cmd[:3], config.dt_control)
            u_bar = out["u_bar"]
            # Desired error-dynamics: e_a_dot = u_bar[:3] (world) and
            # e_psi_dot = u_bar[3:] with e_psi = psi - R' psi_d_world.
            j_w_des = ref.j + u_bar[:3]
            psi_d_w = ref.r_wb @ ref.psi_b
            psi_d_w_dot = ref.r_wb @ (ref.zeta_b + np.cross(ref.omega_b, ref.psi_b))
            psi_dot_des = u_bar[3:] + r_t @ psi_d_w_dot \
                - np.cross(est_state.omega, r_t @ psi_d_w)
            err_p, err_r = out["error"].e_p, out["error"].e_r
            stab = (out["stability_lhs"], out["stability_rhs"], out["stability_ok"])
            u_cmd = u_bar
        else:
            out = controller.step(est_state, ref, config.dt_control)
            j_w_des = est_state.r_wb @ out["u"][:3]
            psi_dot_des = out["u"][3:]
            err_p, err_r = out["e_p"], out["e_r"]
            stab = (np.nan, np.nan, True)
            u_cmd = out["u"]

        w_dot = exact_wrench_rate(j_w_des, psi_dot_des, est_state,
                                  morphology.body, wrench_cmd)
        alloc_out = allocator.step(w_dot, config.dt_control)
        alpha_ref = alloc_out["command"].alpha_ref
        omega_ref = alloc_out["command"].omega_ref

        thrusts = c_f * plant.omega**2
        force_net = plant.wrench().force
        eta = float(np.linalg.norm(force_net) / max(thrusts.sum(), 1e-30))
        if tick % config.log_every_control_step == 0:
            log.append(
                t=t, state=plant.state, ref=ref, e_p=err_p, e_r=err_r,
                alpha_cmd=alpha_ref, omega_cmd=omega_ref,
                alpha_act=plant.alpha, omega_act=plant.omega,
                u=u_cmd, eta_f=min(eta, 1.0), kappa=alloc_out["kappa"],
                residual=alloc_out["residual"], regularized=alloc_out["regularized"],
                stab_lhs=stab[0], stab_rhs=stab[1], stab_ok=stab[2],
            )
        if np.linalg.norm(err_p) > config.divergence_limit:
            diverged = True
            if raise_on_divergence:
                raise SimulationDiverged(t, log)
            break
        if tick == n_ticks - 1:
            break
        for _ in range(steps_per_tick):
            plant.step(alpha_ref, omega_ref, config.dt_physics)

    log.finalize(diverged=diverged)
    return log
