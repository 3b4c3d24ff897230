"""Per-episode physical randomization and privileged-vector encoding."""

from __future__ import annotations

import numpy as np

from .. import rngstream as rs
from ..config import EnvConfig, OOD_RANGES, RandRanges, TRAIN_RANGES
from ..errors import ConfigError
from ..handsim import PhysParams

PRIVILEGED_WIDTH = 9
# privileged object position is normalized by the training drop radius
POSITION_NORM = 0.02
PRIVILEGED_CLIP = 1.5

DISTRIBUTIONS = ("train", "ood")


def ranges_for(distribution: str) -> RandRanges:
    if distribution == "train":
        return TRAIN_RANGES
    if distribution == "ood":
        return OOD_RANGES
    raise ConfigError(f"unknown distribution {distribution!r}")


def randomize(
    cfg: EnvConfig,
    env_ids: np.ndarray,
    episode_idx: np.ndarray,
    distribution: str,
) -> PhysParams:
    """Uniform draws within the distribution's ranges, one env per id.

    Draws come from the (seed, env_id, episode) counter stream, so a
    reset is reproducible regardless of when or where it happens.
    With no_randomization, every parameter sits at the training-range
    midpoint (the disturbance schedule is unaffected).
    """
    r = ranges_for(distribution)
    n = len(env_ids)
    u = rs.uniforms(cfg.seed, env_ids, rs.TAG_RESET, episode_idx, 10)

    def draw(col, lo, hi):
        return lo + (hi - lo) * u[:, col]

    if cfg.no_randomization:
        t = TRAIN_RANGES
        mid = lambda pair: 0.5 * (pair[0] + pair[1])
        params = PhysParams(
            scale=np.full(n, mid(t.scale)),
            mass=np.full(n, mid(t.mass)),
            friction=np.full(n, mid(t.friction)),
            com_offset=np.zeros((n, 2)),
            kp=np.full(n, mid(t.kp)),
            kd=np.full(n, mid(t.kd)),
            lobe_m=np.zeros(n, dtype=np.int64),
            lobe_eps=np.zeros(n),
            disturb_scale=np.full(n, t.disturb_scale),
        )
        params.validate()
        return params

    lobed = u[:, 7] < r.lobed_fraction
    params = PhysParams(
        scale=draw(0, *r.scale),
        mass=draw(1, *r.mass),
        friction=draw(2, *r.friction),
        com_offset=np.stack([draw(3, *r.com), draw(4, *r.com)], axis=-1),
        kp=draw(5, *r.kp),
        kd=draw(6, *r.kd),
        lobe_m=np.where(lobed, 3 + (u[:, 8] < 0.5), 0).astype(np.int64),
        lobe_eps=np.where(lobed, draw(9, *r.lobe_eps), 0.0),
        disturb_scale=np.full(n, r.disturb_scale),
    )
    params.validate()
    return params


def _norm(value: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return 2.0 * (value - lo) / (hi - lo) - 1.0


def privileged_vector(params: PhysParams, obj_pos: np.ndarray) -> np.ndarray:
    """(N, 9): position(2), scale, mass, friction, com(2), kp, kd — each
    normalized to [-1, 1] by the training ranges and clipped to +/-1.5
    so OOD draws stay bounded."""
    t = TRAIN_RANGES
    e = np.empty((params.num, PRIVILEGED_WIDTH))
    e[:, 0:2] = obj_pos / POSITION_NORM
    e[:, 2] = _norm(params.scale, *t.scale)
    e[:, 3] = _norm(params.mass, *t.mass)
    e[:, 4] = _norm(params.friction, *t.friction)
    e[:, 5:7] = _norm(params.com_offset, *t.com)
    e[:, 7] = _norm(params.kp, *t.kp)
    e[:, 8] = _norm(params.kd, *t.kd)
    return np.clip(e, -PRIVILEGED_CLIP, PRIVILEGED_CLIP)
