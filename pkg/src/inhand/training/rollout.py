"""Rollout storage, collection, and generalized advantage estimation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..envgym import RotationEnv
from ..errors import UsageError
from ..nets import PolicyBundle, adapt_estimate, critic_value, encode_extrinsics, policy_act
from ..numkit import ConvStack


@dataclass
class RolloutBuffer:
    """Rectangular (num_envs, horizon) transition storage."""

    obs: np.ndarray  # (E, H, obs_width)
    z: np.ndarray  # (E, H, z_width); z_width may be 0
    e: np.ndarray  # (E, H, 9)
    actions: np.ndarray  # (E, H, 16)
    log_probs: np.ndarray  # (E, H)
    rewards: np.ndarray  # (E, H)
    dones: np.ndarray  # (E, H) bool
    values: np.ndarray  # (E, H)
    valid: np.ndarray  # (E, H) bool; faulted transitions are excluded
    last_values: np.ndarray  # (E,)
    windows: np.ndarray | None = None  # (E, H, T, 32) when stored
    omega_k: np.ndarray | None = None  # (E, H) commanded-direction rate

    @property
    def num_envs(self) -> int:
        return self.obs.shape[0]

    @property
    def horizon(self) -> int:
        return self.obs.shape[1]


def collect_rollout(
    env: RotationEnv,
    bundle: PolicyBundle,
    horizon: int,
    input_mode: str,
    rng: np.random.Generator,
    estimator: ConvStack | None = None,
    store_windows: bool = False,
    act_mode: str = "sample",
) -> RolloutBuffer:
    """Steps every env `horizon` times; auto-resets happen inside the env.

    input_mode 'privileged' feeds the policy z = encoder(e) (or nothing
    for dr bundles); 'estimated' feeds z_hat from the history estimator,
    while the true embedding is still recorded for supervision.
    """
    if input_mode not in ("privileged", "estimated"):
        raise UsageError(f"unknown input mode {input_mode!r}")
    if input_mode == "estimated" and estimator is None:
        estimator = bundle.adapt
        if estimator is None:
            raise UsageError("estimated mode needs an adaptation net")

    e_dim = env.privileged().shape[1]
    z_dim = bundle.extrinsics_width
    n, t_hist = env.n, env.cfg.history_len

    obs = env.observe()
    buf = RolloutBuffer(
        obs=np.zeros((n, horizon, obs.shape[1]), dtype=np.float32),
        z=np.zeros((n, horizon, z_dim), dtype=np.float32),
        e=np.zeros((n, horizon, e_dim), dtype=np.float32),
        actions=np.zeros((n, horizon, 16), dtype=np.float32),
        log_probs=np.zeros((n, horizon), dtype=np.float32),
        rewards=np.zeros((n, horizon), dtype=np.float32),
        dones=np.zeros((n, horizon), dtype=bool),
        values=np.zeros((n, horizon), dtype=np.float32),
        valid=np.ones((n, horizon), dtype=bool),
        last_values=np.zeros(n, dtype=np.float32),
        windows=np.zeros((n, horizon, t_hist, 32), dtype=np.float32) if store_windows else None,
        omega_k=np.zeros((n, horizon), dtype=np.float32),
    )

    for t in range(horizon):
        e = env.privileged()
        if z_dim == 0:
            z_in = None
        elif input_mode == "privileged":
            z_in = encode_extrinsics(bundle, e)
        else:
            z_in = adapt_estimate(estimator, env.adaptation_window())
        if store_windows:
            buf.windows[:, t] = env.adaptation_window()

        action, logp = policy_act(bundle, obs, z_in, act_mode, rng)
        value = critic_value(bundle, obs, z_in)
        out = env.step(action)

        buf.obs[:, t] = obs
        if z_dim:
            buf.z[:, t] = z_in
        buf.e[:, t] = e
        buf.actions[:, t] = action
        buf.log_probs[:, t] = logp
        buf.rewards[:, t] = out.reward
        buf.dones[:, t] = out.done
        buf.values[:, t] = value
        buf.valid[:, t] = ~out.info["fault"]
        buf.omega_k[:, t] = out.info["omega_k"]
        obs = out.obs

    # bootstrap for the cut-off tail
    e = env.privileged()
    if z_dim == 0:
        z_in = None
    elif input_mode == "privileged":
        z_in = encode_extrinsics(bundle, e)
    else:
        z_in = adapt_estimate(estimator, env.adaptation_window())
    buf.last_values = critic_value(bundle, obs, z_in)
    return buf


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    last_values: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (advantages, returns), shapes (E, H).

    Episode boundaries zero the bootstrap; the horizon end bootstraps
    with last_values where the final transition was not terminal.
    """
    e, h = rewards.shape
    adv = np.zeros((e, h), dtype=np.float64)
    running = np.zeros(e, dtype=np.float64)
    for t in reversed(range(h)):
        nonterminal = 1.0 - dones[:, t].astype(np.float64)
        next_values = last_values if t == h - 1 else values[:, t + 1]
        delta = rewards[:, t] + gamma * next_values * nonterminal - values[:, t]
        running = delta + gamma * lam * nonterminal * running
        adv[:, t] = running
    returns = adv + values
    return adv.astype(np.float32), returns.astype(np.float32)
