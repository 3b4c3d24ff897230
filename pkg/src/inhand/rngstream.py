"""Counter-based random streams.

Every random draw in the simulator and environment is a pure function of
(seed, env_id, step/event counter, slot), hashed through splitmix64.
This makes trajectories independent of worker count and batch layout:
an env's stream never depends on how many neighbours were stepped
alongside it.
"""

from __future__ import annotations

import numpy as np

# splitmix64 constants
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

# stream tags so different consumers of the same (seed, env, step) never collide
TAG_RESET = 1
TAG_DISTURB = 2
TAG_OBS_NOISE = 3
TAG_GRASP = 4
TAG_POLICY = 5
TAG_EVAL = 6


def _mix(z: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps by design; suppress the scalar-overflow warning
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def hash64(seed: int, ids: np.ndarray | int, *parts) -> np.ndarray:
    """Hash (seed, ids, *parts) into uint64 words, vectorized over ids.

    Parts may be scalars or arrays broadcastable against ids (e.g. a
    per-env counter)."""
    ids = np.asarray(ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * _GAMMA + _GAMMA)
        z = _mix(z + ids * _GAMMA + _GAMMA)
        for p in parts:
            p = np.asarray(p).astype(np.uint64)
            z = _mix(z + p * _GAMMA + _GAMMA)
    return z


def uniforms(
    seed: int, ids: np.ndarray | int, tag: int, step: int | np.ndarray, count: int
) -> np.ndarray:
    """(len(ids), count) doubles in [0, 1), one independent row per id.

    step may be a per-id counter array. Slot index enters the hash last,
    so widening `count` never changes the leading columns.
    """
    ids = np.atleast_1d(np.asarray(ids, dtype=np.uint64))
    base = hash64(seed, ids, tag, step)
    slots = np.arange(count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix(base[:, None] + slots[None, :] * _GAMMA + _GAMMA)
    return (z >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def uniform_range(
    seed: int,
    ids: np.ndarray | int,
    tag: int,
    step: int | np.ndarray,
    lo: float,
    hi: float,
    count: int = 1,
) -> np.ndarray:
    u = uniforms(seed, ids, tag, step, count)
    return lo + (hi - lo) * u


def randints(
    seed: int, ids: np.ndarray | int, tag: int, step: int | np.ndarray, n: int
) -> np.ndarray:
    """One integer in [0, n) per id."""
    u = uniforms(seed, ids, tag, step, 1)[:, 0]
    return np.minimum((u * n).astype(np.int64), n - 1)
