"""Episode metric definitions.

All metrics are pure functions of the per-step trajectory record, so
aggregate tables can always be recomputed from the raw episode CSV.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np


@dataclass
class EpisodeMetrics:
    ttf: float  # survival time / max episode length, in [0, 1]
    rotr: float  # sum over control steps of the commanded-direction rate
    rotations: float  # accumulated |yaw change|, rad
    objvel: float  # mean object speed, scaled by 100
    torque: float  # mean per-step l1 norm of commanded torque
    steps: int
    drop: bool
    fault: bool

    def as_row(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


METRIC_NAMES = ("ttf", "rotr", "rotations", "objvel", "torque")


def compute_metrics(
    omega_k: np.ndarray,
    dtheta: np.ndarray,
    speed: np.ndarray,
    torque_l1: np.ndarray,
    episode_len: int,
    drop: bool = False,
    fault: bool = False,
) -> EpisodeMetrics:
    """Arrays cover the survived steps only (>= 1)."""
    steps = len(omega_k)
    if steps < 1:
        raise ValueError("trajectory must contain at least one control step")
    return EpisodeMetrics(
        ttf=steps / episode_len,
        rotr=float(np.sum(omega_k)),
        rotations=float(np.sum(np.abs(dtheta))),
        objvel=float(np.mean(speed) * 100.0),
        torque=float(np.mean(torque_l1)),
        steps=steps,
        drop=drop,
        fault=fault,
    )


def aggregate(rows: list[EpisodeMetrics]) -> dict:
    """Per-metric mean over a set of episodes."""
    return {
        name: float(np.mean([getattr(r, name) for r in rows])) for name in METRIC_NAMES
    }
