"""Vectorized rotation environment.

Maintains one rolling window of (joint reading, commanded target) pairs
per env; the policy observation is the flattened tail of that window and
the adaptation module consumes the whole window. All per-env randomness
comes from counter-based streams keyed by (seed, env_id, counter), so
trajectories are independent of batching and worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import rngstream as rs
from ..config import EnvConfig
from ..errors import ConfigError
from ..handsim import (
    HandModel,
    PhysParams,
    SimConstants,
    SimState,
    init_state,
    step_physics,
)
from .grasps import GraspCache, bucket_index
from .randomize import privileged_vector, randomize

OBS_PAIR_WIDTH = 32  # 16 joint readings + 16 targets per timestep


@dataclass
class StepOutput:
    obs: np.ndarray  # (N, obs_width)
    reward: np.ndarray  # (N,)
    done: np.ndarray  # (N,) bool
    info: dict


class RotationEnv:
    def __init__(
        self,
        cfg: EnvConfig,
        cache: GraspCache,
        model: HandModel | None = None,
        consts: SimConstants | None = None,
        env_id_offset: int = 0,
    ):
        cfg.validate()
        cache.validate()
        self.cfg = cfg
        self.cache = cache
        self.model = model or HandModel()
        self.consts = consts or SimConstants()
        self.n = cfg.num_envs
        self.env_ids = env_id_offset + np.arange(self.n)
        self._bucket_lists = cache.bucket_slices()

        self.state = init_state(self.n, self.model)
        self.params = randomize(cfg, self.env_ids, np.zeros(self.n, dtype=np.int64), "train")
        self.q_init = np.zeros((self.n, 16))
        self.window = np.zeros((self.n, cfg.history_len, OBS_PAIR_WIDTH))
        self.prev_target = np.zeros((self.n, 16))
        self.step_count = np.zeros(self.n, dtype=np.int64)
        self.total_steps = np.zeros(self.n, dtype=np.int64)
        self.reset_count = np.zeros(self.n, dtype=np.int64)
        self.low_contact = np.zeros(self.n, dtype=np.int64)
        self.distribution = np.array(["train"] * self.n, dtype=object)
        self._last_torque_l1 = np.zeros(self.n)
        self._pool = (
            ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
        )

    # ---- observation machinery ----------------------------------------------

    def _read_joints(self) -> np.ndarray:
        noise = self.cfg.obs_noise * rs.uniforms(
            self.cfg.seed, self.env_ids, rs.TAG_OBS_NOISE, self.total_steps, 16
        )
        return self.state.q + noise

    def _push_window(self, ids, q_read, target):
        self.window[ids] = np.roll(self.window[ids], -1, axis=1)
        self.window[ids, -1, :16] = q_read
        self.window[ids, -1, 16:] = target

    def observe(self) -> np.ndarray:
        """(N, 32 * obs_len): joint readings then targets, oldest first."""
        tail = self.window[:, -self.cfg.obs_len :]
        q_block = tail[:, :, :16].reshape(self.n, -1)
        a_block = tail[:, :, 16:].reshape(self.n, -1)
        return np.concatenate([q_block, a_block], axis=1).astype(np.float32)

    def adaptation_window(self) -> np.ndarray:
        """(N, T, 32) of (q_t, a_{t-1}) pairs for the estimator."""
        return self.window.astype(np.float32)

    def privileged(self) -> np.ndarray:
        return privileged_vector(self.params, self.state.obj_pos).astype(np.float32)

    # ---- episode control -----------------------------------------------------

    def reset_all(self, distribution: str = "train") -> np.ndarray:
        self.reset_envs(np.arange(self.n), distribution)
        return self.observe()

    def reset_envs(self, ids: np.ndarray, distribution: str | None = None) -> None:
        if len(ids) == 0:
            return
        if distribution is not None:
            self.distribution[ids] = distribution
        self.reset_count[ids] += 1
        for dist in np.unique(self.distribution[ids]):
            sel = ids[self.distribution[ids] == dist]
            self.params.assign(
                sel, randomize(self.cfg, self.env_ids[sel], self.reset_count[sel], str(dist))
            )

        buckets = bucket_index(self.params.scale[ids])
        choice = rs.uniforms(self.cfg.seed, self.env_ids[ids], rs.TAG_GRASP, self.reset_count[ids], 1)[
            :, 0
        ]
        grasp_rows = np.empty(len(ids), dtype=np.int64)
        for i, (b, u) in enumerate(zip(buckets, choice)):
            rows = self._bucket_lists[b]
            grasp_rows[i] = rows[min(int(u * len(rows)), len(rows) - 1)]

        fresh = init_state(len(ids), self.model)
        fresh.q[:] = self.cache.q[grasp_rows]
        fresh.obj_pos[:] = self.cache.obj_pos[grasp_rows]
        fresh.obj_yaw[:] = self.cache.obj_yaw[grasp_rows]
        self.state.assign(ids, fresh)

        self.q_init[ids] = self.cache.q[grasp_rows]
        self.step_count[ids] = 0
        self.low_contact[ids] = 0
        self.prev_target[ids] = self.q_init[ids]

        # histories padded with the initial reading and target = q_init
        noise = self.cfg.obs_noise * rs.uniforms(
            self.cfg.seed, self.env_ids[ids], rs.TAG_OBS_NOISE, self.total_steps[ids], 16
        )
        self.total_steps[ids] += 1
        q_read = self.state.q[ids] + noise
        self.window[ids] = 0.0
        self.window[ids, :, :16] = q_read[:, None, :]
        self.window[ids, :, 16:] = self.q_init[ids][:, None, :]

    def swap_params(self, ids: np.ndarray, distribution: str) -> None:
        """Mid-episode object replacement (evaluation-only protocol):
        fresh physical parameters without touching the kinematic state."""
        self.reset_count[ids] += 1
        self.params.assign(
            ids, randomize(self.cfg, self.env_ids[ids], self.reset_count[ids], distribution)
        )

    # ---- stepping -------------------------------------------------------------

    def _step_physics(self, targets: np.ndarray):
        disturb_u = rs.uniforms(
            self.cfg.seed, self.env_ids, rs.TAG_DISTURB, self.total_steps, 2
        )
        if self._pool is None or self.n < 2 * self.cfg.workers:
            return step_physics(
                self.state, targets, self.params, self.model, self.consts, disturb_u
            )
        # chunked stepping: per-env independence makes results identical
        # for any worker count
        chunks = np.array_split(np.arange(self.n), self.cfg.workers)
        jobs = [
            self._pool.submit(
                step_physics,
                self.state.select(c),
                targets[c],
                self.params.select(c),
                self.model,
                self.consts,
                disturb_u[c],
            )
            for c in chunks
        ]
        results = [j.result() for j in jobs]
        new_state = self.state.copy()
        info0 = results[0][1]
        merged = {
            f: np.concatenate([getattr(r[1], f) for r in results])
            for f in ("torque_l1", "torque_sq", "power", "dtheta", "fault", "min_contacts")
        }
        merged["dpos"] = np.concatenate([r[1].dpos for r in results])
        for c, (s, _) in zip(chunks, results):
            new_state.assign(c, s)
        info = type(info0)(**merged)
        return new_state, info

    def step(self, action: np.ndarray) -> StepOutput:
        """action: (N, 16) absolute PD targets in radians; clipped to the
        joint limits before being applied."""
        action = np.asarray(action, dtype=np.float64)
        if not np.isfinite(action).all():
            raise ConfigError("non-finite action")
        targets = np.clip(action, self.model.joint_lower, self.model.joint_upper)

        state_before_q = self.state.q
        self.state, sinfo = self._step_physics(targets)
        self.step_count += 1
        self.total_steps += 1

        cfg = self.cfg
        dt = self.consts.dt_control
        omega = sinfo.dtheta / dt
        omega_k = omega * cfg.rot_sign
        speed = np.linalg.norm(sinfo.dpos, axis=1) / dt

        terms = {
            "rot": np.clip(omega_k, -cfg.rot_clip, cfg.rot_clip),
            "pose": -cfg.pose_coef * ((self.state.q - self.q_init) ** 2).sum(axis=1),
            "torque": -cfg.torque_coef * sinfo.torque_sq,
            "work": -cfg.work_coef * sinfo.power,
            "linvel": -cfg.linvel_coef * speed**2,
        }
        reward = terms["rot"] + terms["pose"] + terms["torque"] + terms["work"] + terms["linvel"]

        contacts = self.state.contact_active.sum(axis=1)
        self.low_contact = np.where(contacts < 2, self.low_contact + 1, 0)
        out_of_bounds = np.linalg.norm(self.state.obj_pos, axis=1) > cfg.drop_pos
        dropped = (self.low_contact >= cfg.drop_contact_steps) | out_of_bounds
        timeout = self.step_count >= cfg.episode_len
        fault = sinfo.fault
        done = dropped | timeout | fault

        # roll histories with the fresh reading and the executed target
        q_read = self._read_joints()
        all_ids = np.arange(self.n)
        self._push_window(all_ids, q_read, targets)
        self.prev_target = targets
        self._last_torque_l1 = sinfo.torque_l1

        info = {
            "omega_k": omega_k,
            "dtheta": sinfo.dtheta,
            "speed": speed,
            "torque_l1": sinfo.torque_l1,
            "contacts": contacts,
            "dropped": dropped,
            "timeout": timeout & ~dropped,
            "fault": fault,
            "reward_terms": terms,
            "step_count": self.step_count.copy(),
        }

        if cfg.auto_reset and done.any():
            self.reset_envs(np.where(done)[0])

        return StepOutput(obs=self.observe(), reward=reward, done=done, info=info)
