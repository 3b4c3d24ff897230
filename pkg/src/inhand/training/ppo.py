"""Clipped-surrogate PPO over the hand-rolled networks.

The update differentiates the joint objective through the policy, the
critic, and (for privileged bundles) the property encoder, using the
layer-exact backward passes. Gradient flow:

    d loss / d logp  ->  d mean, d log_std   (Gaussian density)
    d mean           ->  policy backward     -> d input
    d value          ->  critic backward     -> d input
    d input[:, obs_width:]                   -> encoder backward
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import RunConfig, TrainConfig
from ..envgym import GraspCache, RotationEnv
from ..errors import TrainingFault
from ..nets import PolicyBundle, make_bundle
from ..numkit import AdamState, adam_step, clip_grads_
from .rollout import RolloutBuffer, collect_rollout, compute_gae

LOG2PI = float(np.log(2.0 * np.pi))


@dataclass
class UpdateStats:
    policy_loss: float
    value_loss: float
    entropy: float
    grad_norm: float
    clip_fraction: float
    approx_kl: float = 0.0
    skipped: bool = False


# log_std bounds: floor stops premature determinism, ceiling stops the
# noise/work-penalty feedback loop seen when the std runs away
LOG_STD_BOUNDS = (-4.0, -1.5)
KL_STOP = 0.02


def ppo_update(
    buffer: RolloutBuffer, bundle: PolicyBundle, opt: AdamState, hyper: TrainConfig, rng: np.random.Generator
) -> UpdateStats:
    adv, returns = compute_gae(
        buffer.rewards, buffer.values, buffer.dones, buffer.last_values,
        hyper.gamma, hyper.gae_lambda,
    )
    valid = buffer.valid.reshape(-1)
    flat_obs = buffer.obs.reshape(-1, buffer.obs.shape[-1])[valid]
    flat_e = buffer.e.reshape(-1, buffer.e.shape[-1])[valid]
    flat_act = buffer.actions.reshape(-1, 16)[valid]
    flat_logp = buffer.log_probs.reshape(-1)[valid]
    flat_adv = adv.reshape(-1)[valid]
    flat_ret = returns.reshape(-1)[valid]

    flat_adv = (flat_adv - flat_adv.mean()) / (flat_adv.std() + 1e-8)

    n = len(flat_adv)
    obs_w = bundle.obs_width
    stats = UpdateStats(0.0, 0.0, 0.0, 0.0, 0.0)
    batches = 0
    stop = False

    for _ in range(hyper.epochs):
        if stop:
            break
        order = rng.permutation(n)
        for lo in range(0, n, hyper.minibatch):
            sel = order[lo : lo + hyper.minibatch]
            if len(sel) < 2:
                continue
            m = len(sel)
            obs, e = flat_obs[sel], flat_e[sel]
            act, logp_old = flat_act[sel], flat_logp[sel]
            a_norm, ret = flat_adv[sel], flat_ret[sel]

            # fresh forward so gradients flow through the current encoder
            enc_cache = None
            if bundle.kind == "extrinsics":
                z, enc_cache = bundle.encoder.forward(e)
                x = np.concatenate([obs, z], axis=1)
            elif bundle.kind == "sysid":
                x = np.concatenate([obs, e], axis=1)
            else:
                x = obs
            mean, pol_cache = bundle.policy.forward(x)
            value, crit_cache = bundle.critic.forward(x)
            value = value[:, 0]

            log_std = bundle.log_std
            inv_var = np.exp(-2.0 * log_std)
            diff = act - mean
            logp_new = (-0.5 * diff**2 * inv_var - log_std - 0.5 * LOG2PI).sum(axis=1)

            ratio = np.exp(logp_new - logp_old)
            clipped = np.clip(ratio, 1.0 - hyper.clip_eps, 1.0 + hyper.clip_eps)
            surr_raw = ratio * a_norm
            surr_clip = clipped * a_norm
            policy_loss = -np.minimum(surr_raw, surr_clip).mean()
            value_loss = 0.5 * np.mean((value - ret) ** 2)
            entropy = float((log_std + 0.5 * (LOG2PI + 1.0)).sum())
            total = policy_loss + hyper.value_coef * value_loss - hyper.entropy_coef * entropy

            if not np.isfinite(total):
                stats.skipped = True
                continue

            # d loss / d logp_new: zero on the clipped branch
            unclipped = surr_raw <= surr_clip
            dlogp = np.where(unclipped, -ratio * a_norm, 0.0) / m
            dmean = dlogp[:, None] * (diff * inv_var)
            dlog_std = (dlogp[:, None] * (diff**2 * inv_var - 1.0)).sum(axis=0)
            dlog_std -= hyper.entropy_coef  # entropy bonus, per dimension

            dvalue = hyper.value_coef * (value - ret)[:, None] / m

            pol_grads, dx_pol = bundle.policy.backward(pol_cache, dmean.astype(np.float32))
            crit_grads, dx_crit = bundle.critic.backward(crit_cache, dvalue.astype(np.float32))

            grads = pol_grads + crit_grads
            if bundle.kind == "extrinsics":
                dz = dx_pol[:, obs_w:] + dx_crit[:, obs_w:]
                enc_grads, _ = bundle.encoder.backward(enc_cache, dz)
                grads = grads + enc_grads
            grads = grads + [dlog_std.astype(np.float32)]

            norm = clip_grads_(grads, hyper.grad_clip)
            adam_step(bundle.actor_critic_parameters(), grads, opt)

            stats.policy_loss += float(policy_loss)
            stats.value_loss += float(value_loss)
            stats.entropy = entropy
            stats.grad_norm += norm
            stats.clip_fraction += float((~unclipped).mean())
            batches += 1

    if batches:
        stats.policy_loss /= batches
        stats.value_loss /= batches
        stats.grad_norm /= batches
        stats.clip_fraction /= batches
    return stats


VARIANT_KIND = {"expert": "extrinsics", "dr": "dr", "sysid": "sysid"}


def train_base(
    run_cfg: RunConfig,
    cache: GraspCache,
    progress=None,
) -> tuple[PolicyBundle, list[dict]]:
    """Stage 1: PPO on the privileged pipeline (or a baseline variant).

    Returns the trained bundle and one log row per update. progress, if
    given, is called with each log row.
    """
    env_cfg = run_cfg.env
    hyper = run_cfg.train
    env = RotationEnv(env_cfg, cache)
    rng = np.random.default_rng(env_cfg.seed)
    bundle = make_bundle(
        VARIANT_KIND[hyper.variant], rng, obs_width=env_cfg.obs_width,
        history_len=env_cfg.history_len,
    )
    # start the action head at the average cached grasp so the very first
    # episodes hold the object instead of flailing
    bundle.policy.layers[-1].bias[:] = cache.q.mean(axis=0).astype(np.float32)

    opt = AdamState.init(bundle.actor_critic_parameters(), lr=hyper.lr)
    env.reset_all("train")

    logs: list[dict] = []
    ret_acc = np.zeros(env.n)
    finished_returns: list[float] = []
    low_streak = 0

    for update in range(hyper.updates):
        buf = collect_rollout(env, bundle, hyper.horizon, "privileged", rng)
        stats = ppo_update(buf, bundle, opt, hyper, rng)

        # episode-return bookkeeping across the rollout
        for t in range(buf.horizon):
            ret_acc += buf.rewards[:, t]
            ended = buf.dones[:, t]
            if ended.any():
                finished_returns.extend(ret_acc[ended].tolist())
                ret_acc[ended] = 0.0
        recent = float(np.mean(finished_returns[-200:])) if finished_returns else 0.0

        row = {
            "update": update,
            "policy_loss": stats.policy_loss,
            "value_loss": stats.value_loss,
            "entropy": stats.entropy,
            "grad_norm": stats.grad_norm,
            "clip_fraction": stats.clip_fraction,
            "mean_return": recent,
            "mean_omega_k": float(buf.omega_k.mean()),
            "mean_reward": float(buf.rewards.mean()),
        }
        logs.append(row)
        if progress is not None:
            progress(row)

        if finished_returns and recent < hyper.divergence_floor:
            low_streak += 1
            if low_streak >= hyper.divergence_patience:
                raise TrainingFault(
                    f"mean return {recent:.1f} below floor "
                    f"{hyper.divergence_floor} for {low_streak} consecutive updates"
                )
        else:
            low_streak = 0

    return bundle, logs
