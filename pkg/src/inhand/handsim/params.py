"""Physical truth of one environment batch and the fixed sim constants."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ConfigError

# canonical object radius before the per-env scale multiplier
OBJECT_BASE_RADIUS = 0.04


@dataclass(frozen=True)
class HandModel:
    """Four identical planar fingers anchored on a base circle, chains
    heading inward (anchor angle + pi)."""

    base_radius: float = 0.06
    link_lengths: tuple[float, float, float, float] = (0.03, 0.025, 0.02, 0.015)
    joint_lower: float = -1.8
    joint_upper: float = 1.8
    joint_inertia: float = 1e-3  # kg m^2 per joint
    joint_damping: float = 0.01  # N m s / rad
    torque_limit: float = 0.5  # N m

    fingers: int = 4
    joints_per_finger: int = 4

    def __post_init__(self):
        if any(l <= 0 for l in self.link_lengths):
            raise ConfigError("link lengths must be positive")
        if self.joint_lower >= self.joint_upper:
            raise ConfigError("joint limits must be ordered")

    @property
    def dof(self) -> int:
        return self.fingers * self.joints_per_finger

    @property
    def base_angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.fingers) / self.fingers

    @property
    def base_anchors(self) -> np.ndarray:
        beta = self.base_angles
        return self.base_radius * np.stack([np.cos(beta), np.sin(beta)], axis=-1)

    @property
    def headings(self) -> np.ndarray:
        return self.base_angles + np.pi


@dataclass(frozen=True)
class SimConstants:
    """Integration and contact constants shared by every environment."""

    dt_control: float = 1.0 / 20.0
    substeps: int = 6
    contact_stiffness: float = 500.0  # N/m
    contact_damping: float = 5.0  # N s/m, approach only
    slip_scale: float = 0.01  # m/s, tanh friction regularization
    linear_drag: float = 0.05  # N s/m on the object
    angular_drag: float = 0.002  # N m s on the object
    bias_accel: float = 2.0  # m/s^2 along -y, gravity stand-in
    force_decay: float = 0.9  # disturbance decay factor ...
    force_decay_interval: float = 0.08  # ... per this many seconds
    resample_prob: float = 0.25  # fresh disturbance per control step
    # Stability clamps for light objects at the fixed substep rate: the
    # effective stiffness/damping/friction impulse per contact never
    # exceeds what the object's own inertia can absorb in one substep.
    stiffness_safety: float = 0.7
    damping_safety: float = 0.5

    @property
    def dt(self) -> float:
        return self.dt_control / self.substeps


@dataclass
class PhysParams:
    """Batched randomized physical truth; the source of the privileged
    vector. All arrays lead with the environment dimension."""

    scale: np.ndarray  # (N,)
    mass: np.ndarray  # (N,) kg
    friction: np.ndarray  # (N,)
    com_offset: np.ndarray  # (N, 2) m, in the object frame
    kp: np.ndarray  # (N,)
    kd: np.ndarray  # (N,)
    lobe_m: np.ndarray  # (N,) int; 0 = disk
    lobe_eps: np.ndarray  # (N,)
    disturb_scale: np.ndarray  # (N,) force magnitude as a multiple of mass

    @property
    def num(self) -> int:
        return self.scale.shape[0]

    def validate(self) -> None:
        if np.any(self.mass <= 0) or np.any(self.friction <= 0):
            raise ConfigError("mass and friction must be positive")
        if np.any(self.kp <= 0) or np.any(self.kd <= 0):
            raise ConfigError("PD gains must be positive")
        min_radius = OBJECT_BASE_RADIUS * self.scale * (1.0 - self.lobe_eps)
        if np.any(np.linalg.norm(self.com_offset, axis=-1) >= min_radius):
            raise ConfigError("COM offset outside the object")

    def select(self, idx) -> "PhysParams":
        return PhysParams(
            scale=self.scale[idx],
            mass=self.mass[idx],
            friction=self.friction[idx],
            com_offset=self.com_offset[idx],
            kp=self.kp[idx],
            kd=self.kd[idx],
            lobe_m=self.lobe_m[idx],
            lobe_eps=self.lobe_eps[idx],
            disturb_scale=self.disturb_scale[idx],
        )

    def assign(self, idx, other: "PhysParams") -> None:
        for name in (
            "scale",
            "mass",
            "friction",
            "com_offset",
            "kp",
            "kd",
            "lobe_m",
            "lobe_eps",
            "disturb_scale",
        ):
            getattr(self, name)[idx] = getattr(other, name)

    def copy(self) -> "PhysParams":
        return self.select(slice(None)).copy_arrays()

    def copy_arrays(self) -> "PhysParams":
        return PhysParams(
            **{
                name: np.array(getattr(self, name), copy=True)
                for name in (
                    "scale",
                    "mass",
                    "friction",
                    "com_offset",
                    "kp",
                    "kd",
                    "lobe_m",
                    "lobe_eps",
                    "disturb_scale",
                )
            }
        )

    def surface_radius(self, phi_world: np.ndarray, yaw: np.ndarray) -> np.ndarray:
        """Radius of the object boundary at world angle phi, given yaw.

        phi_world: (N, K); yaw: (N,). Disk unless lobe_m > 0, in which
        case rho(phi) = rho0 (1 + eps cos(m (phi - yaw))).
        """
        base = OBJECT_BASE_RADIUS * self.scale[:, None]
        lobed = self.lobe_m[:, None] > 0
        wobble = 1.0 + self.lobe_eps[:, None] * np.cos(
            self.lobe_m[:, None] * (phi_world - yaw[:, None])
        )
        return np.where(lobed, base * wobble, base)

    def rotational_inertia(self) -> np.ndarray:
        """About the COM: half m r^2 with the pre-lobe scaled radius."""
        return 0.5 * self.mass * (OBJECT_BASE_RADIUS * self.scale) ** 2


def nominal_params(n: int, scale: float = 0.78) -> PhysParams:
    """Midpoint-of-training-range parameters, handy for tests."""
    return PhysParams(
        scale=np.full(n, scale),
        mass=np.full(n, 0.13),
        friction=np.full(n, 1.65),
        com_offset=np.zeros((n, 2)),
        kp=np.full(n, 3.0),
        kd=np.full(n, 0.1),
        lobe_m=np.zeros(n, dtype=np.int64),
        lobe_eps=np.zeros(n),
        disturb_scale=np.full(n, 2.0),
    )
