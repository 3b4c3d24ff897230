"""Stage 2: on-policy supervised regression of the history estimator.

The frozen teacher provides embedding targets z = encoder(e) while the
student drives data collection with its own predictions (the estimator
is in the loop from the first rollout), so the window distribution
matches deployment. Iterations repeat collect -> regress until the
on-policy loss plateaus.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from ..config import RunConfig
from ..envgym import GraspCache, RotationEnv
from ..errors import TrainingFault
from ..nets import PolicyBundle, adapt_estimate, encode_extrinsics, make_adaptation_net
from ..numkit import AdamState, ConvStack, adam_step, clip_grads_
from .rollout import collect_rollout


def _regression_targets(bundle: PolicyBundle, e_flat: np.ndarray) -> np.ndarray:
    return encode_extrinsics(bundle, e_flat)


def train_adaptation(
    run_cfg: RunConfig,
    cache: GraspCache,
    bundle: PolicyBundle,
    history_len: int | None = None,
    progress=None,
) -> tuple[ConvStack, list[dict]]:
    """Returns the trained estimator and per-iteration log rows.

    The teacher bundle is frozen: a parameter-hash assertion guards
    every iteration.
    """
    if bundle.kind == "dr":
        raise TrainingFault("dr bundles have no embedding to distill")
    env_cfg = dataclasses.replace(run_cfg.env)
    if history_len is not None:
        env_cfg.history_len = history_len
    hyper = run_cfg.adapt

    env = RotationEnv(env_cfg, cache)
    rng = np.random.default_rng(env_cfg.seed + 104729)  # distinct stream from stage 1
    estimator = make_adaptation_net(env_cfg.history_len, bundle.extrinsics_width, rng)
    opt = AdamState.init(estimator.parameters(), lr=hyper.lr)

    freeze_hash = bundle.frozen_hash()
    env.reset_all("train")

    logs: list[dict] = []
    iter_losses: list[float] = []
    plateau = 0

    for iteration in range(hyper.iterations):
        buf = collect_rollout(
            env, bundle, hyper.horizon, "estimated", rng,
            estimator=estimator, store_windows=True,
        )
        valid = buf.valid.reshape(-1)
        windows = buf.windows.reshape(-1, env_cfg.history_len, 32)[valid]
        targets = _regression_targets(bundle, buf.e.reshape(-1, buf.e.shape[-1])[valid])

        # on-policy loss of the current estimator, before this iteration's fit
        pred = adapt_estimate(estimator, windows)
        current = float(np.mean((pred - targets) ** 2))
        iter_losses.append(current)

        n = len(windows)
        for _ in range(hyper.epochs):
            order = rng.permutation(n)
            for lo in range(0, n, hyper.minibatch):
                sel = order[lo : lo + hyper.minibatch]
                if len(sel) < 2:
                    continue
                out, cache_fwd = estimator.forward(windows[sel])
                err = out - targets[sel]
                grad_out = (2.0 / err.size) * err
                grads, _ = estimator.backward(cache_fwd, grad_out.astype(np.float32))
                clip_grads_(grads, 1.0)
                adam_step(estimator.parameters(), grads, opt)

        if bundle.frozen_hash() != freeze_hash:
            raise TrainingFault("teacher parameters changed during stage 2")

        row = {"iteration": iteration, "mse": current, "samples": int(n)}
        logs.append(row)
        if progress is not None:
            progress(row)

        if iteration >= 3 and min(iter_losses[1:4]) >= iter_losses[0]:
            raise TrainingFault(
                f"regression loss never improved over the first iterations: {iter_losses[:4]}"
            )
        if iteration >= 1:
            best_before = min(iter_losses[:-1])
            if iter_losses[-1] > best_before * (1.0 - hyper.plateau_tol):
                plateau += 1
            else:
                plateau = 0
            if plateau >= hyper.plateau_patience:
                break

    return estimator, logs


def adaptation_holdout(
    run_cfg: RunConfig,
    cache: GraspCache,
    bundle: PolicyBundle,
    estimator: ConvStack,
    episodes: int | None = None,
    seed_shift: int = 7919,
) -> dict:
    """Held-out quality of the estimator under fresh randomization:
    MSE(z_hat, z) versus the variance of z over the same set."""
    env_cfg = dataclasses.replace(run_cfg.env)
    env_cfg.history_len = estimator.history_len
    env_cfg.num_envs = episodes or run_cfg.adapt.holdout_episodes
    env_cfg.seed = env_cfg.seed + seed_shift

    env = RotationEnv(env_cfg, cache)
    rng = np.random.default_rng(env_cfg.seed)
    env.reset_all("train")
    buf = collect_rollout(
        env, bundle, env_cfg.episode_len // 2, "estimated", rng,
        estimator=estimator, store_windows=True,
    )
    valid = buf.valid.reshape(-1)
    windows = buf.windows.reshape(-1, env_cfg.history_len, 32)[valid]
    targets = _regression_targets(bundle, buf.e.reshape(-1, buf.e.shape[-1])[valid])
    pred = adapt_estimate(estimator, windows)
    mse = float(np.mean((pred - targets) ** 2))
    var = float(targets.var(axis=0).mean())
    return {"mse": mse, "z_variance": var, "samples": int(valid.sum())}
