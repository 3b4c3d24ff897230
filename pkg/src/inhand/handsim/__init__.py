from .params import HandModel, PhysParams, SimConstants, OBJECT_BASE_RADIUS, nominal_params
from .hand import fingertip_fk, fingertip_velocities, joint_torques_from_tip_forces
from .contact import ContactResult, contact_forces, com_position, rotate, perp, cross2
from .physics import SimState, StepInfo, init_state, step_physics, sample_disturbance, kinetic_energy

__all__ = [
    "HandModel",
    "PhysParams",
    "SimConstants",
    "OBJECT_BASE_RADIUS",
    "nominal_params",
    "fingertip_fk",
    "fingertip_velocities",
    "joint_torques_from_tip_forces",
    "ContactResult",
    "contact_forces",
    "com_position",
    "rotate",
    "perp",
    "cross2",
    "SimState",
    "StepInfo",
    "init_state",
    "step_physics",
    "sample_disturbance",
    "kinetic_energy",
]
