"""State container and the control-rate physics step.

One control step holds the PD target fixed and runs the configured
number of substeps. Joints and object follow semi-implicit Euler;
velocity drag (joint damping, object linear/angular drag) is folded in
implicitly so it dissipates unconditionally at the fixed substep rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contact import ContactResult, com_position, contact_forces, cross2
from .hand import fingertip_fk, fingertip_velocities
from .params import HandModel, PhysParams, SimConstants

_STATE_FIELDS = (
    "q",
    "qd",
    "obj_pos",
    "obj_yaw",
    "obj_linvel",
    "obj_angvel",
    "disturb",
    "rot_accum",
    "contact_active",
    "contact_depth",
    "contact_fn",
    "contact_ft",
)


@dataclass
class SimState:
    q: np.ndarray  # (N, 16) rad
    qd: np.ndarray  # (N, 16) rad/s
    obj_pos: np.ndarray  # (N, 2) m
    obj_yaw: np.ndarray  # (N,) rad
    obj_linvel: np.ndarray  # (N, 2) m/s
    obj_angvel: np.ndarray  # (N,) rad/s
    disturb: np.ndarray  # (N, 2) N
    rot_accum: np.ndarray  # (N,) rad, signed
    contact_active: np.ndarray  # (N, 4) bool, from the last substep
    contact_depth: np.ndarray  # (N, 4) m
    contact_fn: np.ndarray  # (N, 4) N
    contact_ft: np.ndarray  # (N, 4) N, signed

    @property
    def num(self) -> int:
        return self.q.shape[0]

    def copy(self) -> "SimState":
        return SimState(**{f: np.array(getattr(self, f), copy=True) for f in _STATE_FIELDS})

    def assign(self, idx, other: "SimState") -> None:
        for f in _STATE_FIELDS:
            getattr(self, f)[idx] = getattr(other, f)

    def select(self, idx) -> "SimState":
        return SimState(**{f: np.array(getattr(self, f)[idx], copy=True) for f in _STATE_FIELDS})

    def is_finite(self) -> np.ndarray:
        ok = np.ones(self.num, dtype=bool)
        for f in ("q", "qd", "obj_pos", "obj_linvel", "disturb"):
            ok &= np.isfinite(getattr(self, f)).all(axis=1)
        for f in ("obj_yaw", "obj_angvel", "rot_accum"):
            ok &= np.isfinite(getattr(self, f))
        return ok


def init_state(n: int, model: HandModel) -> SimState:
    return SimState(
        q=np.zeros((n, model.dof)),
        qd=np.zeros((n, model.dof)),
        obj_pos=np.zeros((n, 2)),
        obj_yaw=np.zeros(n),
        obj_linvel=np.zeros((n, 2)),
        obj_angvel=np.zeros(n),
        disturb=np.zeros((n, 2)),
        rot_accum=np.zeros(n),
        contact_active=np.zeros((n, model.fingers), dtype=bool),
        contact_depth=np.zeros((n, model.fingers)),
        contact_fn=np.zeros((n, model.fingers)),
        contact_ft=np.zeros((n, model.fingers)),
    )


@dataclass
class StepInfo:
    """Per-control-step aggregates used by reward, metrics, and logs."""

    torque_l1: np.ndarray  # (N,) substep mean of ||tau_cmd||_1
    torque_sq: np.ndarray  # (N,) substep mean of ||tau_cmd||^2
    power: np.ndarray  # (N,) substep mean of tau_cmd . qd
    dtheta: np.ndarray  # (N,) yaw change over the control step
    dpos: np.ndarray  # (N, 2) object translation over the control step
    fault: np.ndarray  # (N,) bool, state went non-finite
    min_contacts: np.ndarray  # (N,) fewest simultaneously active contacts seen


def sample_disturbance(
    disturb: np.ndarray,
    params: PhysParams,
    u_resample: np.ndarray,
    u_angle: np.ndarray,
    consts: SimConstants,
) -> np.ndarray:
    """Fresh force with probability resample_prob, else keep (decay
    happens inside the substep loop). Uniform random direction,
    magnitude disturb_scale * mass."""
    fresh = u_resample < consts.resample_prob
    angle = 2.0 * np.pi * u_angle
    magnitude = params.disturb_scale * params.mass
    new = magnitude[:, None] * np.stack([np.cos(angle), np.sin(angle)], axis=-1)
    return np.where(fresh[:, None], new, disturb)


def step_physics(
    state: SimState,
    targets: np.ndarray,
    params: PhysParams,
    model: HandModel,
    consts: SimConstants,
    disturb_u: np.ndarray | None = None,
) -> tuple[SimState, StepInfo]:
    """Advance one control step (substeps at the inner rate, target held).

    disturb_u: (N, 2) uniforms driving the resample draw, or None to
    leave the disturbance schedule untouched this step.
    """
    s = state.copy()
    n = s.num
    h = consts.dt
    decay = consts.force_decay ** (h / consts.force_decay_interval)

    if disturb_u is not None:
        s.disturb = sample_disturbance(
            s.disturb, params, disturb_u[:, 0], disturb_u[:, 1], consts
        )

    torque_l1 = np.zeros(n)
    torque_sq = np.zeros(n)
    power = np.zeros(n)
    yaw_before = s.obj_yaw.copy()
    pos_before = s.obj_pos.copy()
    min_contacts = np.full(n, model.fingers, dtype=np.int64)

    inertia = params.rotational_inertia()
    mass = params.mass
    contact: ContactResult | None = None

    for _ in range(consts.substeps):
        tips, jac = fingertip_fk(model, s.q)
        tip_vel = fingertip_velocities(jac, s.qd)
        contact = contact_forces(
            tips, tip_vel, jac, s.obj_pos, s.obj_yaw, s.obj_linvel, s.obj_angvel, params, consts
        )
        min_contacts = np.minimum(min_contacts, contact.num_active)

        tau_cmd = np.clip(
            params.kp[:, None] * (targets - s.q) - params.kd[:, None] * s.qd,
            -model.torque_limit,
            model.torque_limit,
        )
        torque_l1 += np.abs(tau_cmd).sum(axis=1)
        torque_sq += (tau_cmd**2).sum(axis=1)

        joint_tau = tau_cmd + contact.reaction
        qd_new = (s.qd + h * joint_tau / model.joint_inertia) / (
            1.0 + h * model.joint_damping / model.joint_inertia
        )
        power += (tau_cmd * qd_new).sum(axis=1)
        s.qd = qd_new
        s.q = np.clip(s.q + h * s.qd, model.joint_lower, model.joint_upper)

        bias = np.zeros((n, 2))
        bias[:, 1] = -consts.bias_accel * mass
        total_force = contact.force.sum(axis=1) + s.disturb + bias
        s.obj_linvel = (s.obj_linvel + h * total_force / mass[:, None]) / (
            1.0 + h * consts.linear_drag / mass[:, None]
        )
        s.obj_pos = s.obj_pos + h * s.obj_linvel

        com = com_position(params, s.obj_pos, s.obj_yaw)
        torque = contact.object_torque + cross2(s.obj_pos - com, s.disturb)
        s.obj_angvel = (s.obj_angvel + h * torque / inertia) / (
            1.0 + h * consts.angular_drag / inertia
        )
        dyaw = h * s.obj_angvel
        s.obj_yaw = s.obj_yaw + dyaw
        s.rot_accum = s.rot_accum + dyaw

        s.disturb = s.disturb * decay

    s.contact_active = contact.active
    s.contact_depth = contact.penetration
    s.contact_fn = contact.normal_force
    s.contact_ft = contact.tangent_force

    fault = ~s.is_finite()
    if fault.any():
        idx = np.where(fault)[0]
        clean = init_state(len(idx), model)
        s.assign(idx, clean)

    info = StepInfo(
        torque_l1=torque_l1 / consts.substeps,
        torque_sq=torque_sq / consts.substeps,
        power=power / consts.substeps,
        dtheta=s.obj_yaw - yaw_before,
        dpos=s.obj_pos - pos_before,
        fault=fault,
        min_contacts=min_contacts,
    )
    return s, info


def kinetic_energy(
    state: SimState, params: PhysParams, model: HandModel
) -> np.ndarray:
    """(N,) joint + object translational + object rotational KE."""
    joints = 0.5 * model.joint_inertia * (state.qd**2).sum(axis=1)
    trans = 0.5 * params.mass * (state.obj_linvel**2).sum(axis=1)
    rot = 0.5 * params.rotational_inertia() * state.obj_angvel**2
    return joints + trans + rot
