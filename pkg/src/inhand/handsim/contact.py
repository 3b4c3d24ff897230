"""Penalty contacts with regularized Coulomb friction.

A fingertip touching the object boundary produces a normal penalty
force (spring on penetration plus an approach-only damper) on the
object, a friction force bounded by the cone |F_t| <= mu N, and the
Jacobian-transpose reaction on the finger joints. Per-contact stiffness,
damping, and friction impulses are clamped by what the object's inertia
can absorb in one substep so the lightest objects stay integrable at the
fixed substep rate; the clamps never enlarge a force, so the cone bound
survives them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hand import joint_torques_from_tip_forces
from .params import HandModel, PhysParams, SimConstants


def rotate(vec: np.ndarray, angle: np.ndarray) -> np.ndarray:
    """vec: (..., 2) rotated by angle (...,)."""
    c, s = np.cos(angle), np.sin(angle)
    x, y = vec[..., 0], vec[..., 1]
    return np.stack([c * x - s * y, s * x + c * y], axis=-1)


def perp(vec: np.ndarray) -> np.ndarray:
    return np.stack([-vec[..., 1], vec[..., 0]], axis=-1)


def cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass
class ContactResult:
    force: np.ndarray  # (N, 4, 2) on the object, world frame
    object_torque: np.ndarray  # (N,) about the COM
    reaction: np.ndarray  # (N, 16) joint torques on the hand
    active: np.ndarray  # (N, 4) bool
    penetration: np.ndarray  # (N, 4) m, zero when inactive
    normal_force: np.ndarray  # (N, 4) N
    tangent_force: np.ndarray  # (N, 4) N, signed along the tangent
    num_active: np.ndarray  # (N,)


def com_position(params: PhysParams, obj_pos: np.ndarray, obj_yaw: np.ndarray) -> np.ndarray:
    return obj_pos + rotate(params.com_offset, obj_yaw)


def contact_forces(
    tips: np.ndarray,
    tip_vel: np.ndarray,
    jac: np.ndarray,
    obj_pos: np.ndarray,
    obj_yaw: np.ndarray,
    obj_linvel: np.ndarray,
    obj_angvel: np.ndarray,
    params: PhysParams,
    consts: SimConstants,
) -> ContactResult:
    rel = tips - obj_pos[:, None, :]  # (N, 4, 2)
    dist = np.maximum(np.linalg.norm(rel, axis=-1), 1e-12)
    outward = rel / dist[..., None]  # center -> fingertip

    phi = np.arctan2(rel[..., 1], rel[..., 0])
    surface = params.surface_radius(phi, obj_yaw)
    penetration = surface - dist
    active = penetration > 0.0
    num_active = active.sum(axis=1)

    com = com_position(params, obj_pos, obj_yaw)
    # object material velocity at the fingertip (rotation about the COM)
    v_point = obj_linvel[:, None, :] + obj_angvel[:, None, None] * perp(tips - com[:, None, :])
    v_rel = tip_vel - v_point

    h = consts.dt
    share = np.maximum(num_active, 1)[:, None]
    mass = params.mass[:, None]
    k_eff = np.minimum(consts.contact_stiffness, consts.stiffness_safety * mass / (h * h * share))
    c_eff = np.minimum(consts.contact_damping, consts.damping_safety * mass / (h * share))

    approach = -np.einsum("nkc,nkc->nk", outward, v_rel)  # >0 when closing
    normal_mag = np.where(
        active, k_eff * np.maximum(penetration, 0.0) + c_eff * np.maximum(approach, 0.0), 0.0
    )

    tangent = perp(-outward)  # consistent right-handed tangent
    v_t = np.einsum("nkc,nkc->nk", tangent, v_rel)
    friction_mag = params.friction[:, None] * normal_mag * np.abs(
        np.tanh(v_t / consts.slip_scale)
    )
    impulse_cap = consts.damping_safety * mass * np.abs(v_t) / (h * share)
    tangent_force = np.where(active, np.sign(v_t) * np.minimum(friction_mag, impulse_cap), 0.0)

    force = (-outward) * normal_mag[..., None] + tangent * tangent_force[..., None]

    object_torque = cross2(tips - com[:, None, :], force).sum(axis=1)
    reaction = joint_torques_from_tip_forces(jac, -force)

    return ContactResult(
        force=force,
        object_torque=object_torque,
        reaction=reaction,
        active=active,
        penetration=np.where(active, penetration, 0.0),
        normal_force=normal_mag,
        tangent_force=tangent_force,
        num_active=num_active,
    )
