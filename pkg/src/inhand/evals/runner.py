"""Evaluation protocol: batched episode runs, variant comparison tables,
the recorded-replay baseline, and extrinsics trace export."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..config import EnvConfig
from ..envgym import GraspCache, RotationEnv
from ..errors import ConfigError
from ..nets import PolicyBundle, encode_extrinsics, policy_act
from .controllers import Controller, VariantSpec
from .metrics import EpisodeMetrics, METRIC_NAMES, aggregate, compute_metrics

EVAL_BATCH = 256


@dataclass
class EvalResult:
    variant: str
    distribution: str
    rows: list[dict]  # one per episode, metrics + parameters
    per_seed: dict[int, dict]  # seed -> metric means
    mean: dict[str, float]  # cross-seed mean of per-seed means
    std: dict[str, float]  # cross-seed std of per-seed means

    def table_row(self) -> dict:
        out = {"variant": self.variant, "distribution": self.distribution}
        for name in METRIC_NAMES:
            out[f"{name}_mean"] = self.mean[name]
            out[f"{name}_std"] = self.std[name]
        return out


def _episode_env_cfg(env_cfg: EnvConfig, n: int, seed: int, window: int | None) -> EnvConfig:
    cfg = dataclasses.replace(env_cfg)
    cfg.num_envs = n
    cfg.seed = seed
    cfg.eval_mode = True
    cfg.auto_reset = False
    if window is not None:
        cfg.history_len = window
    return cfg


def run_episodes(
    controller: Controller,
    env_cfg: EnvConfig,
    cache: GraspCache,
    episodes: int,
    seed: int,
    distribution: str,
    window: int | None = None,
    trace_hook=None,
    swap_every: int | None = None,
) -> list[dict]:
    """Runs `episodes` one-shot episodes (no auto-reset) in batches.

    trace_hook(env, controller, episode_ids, t, alive) is called after
    every step when provided (used by the trace exporter).
    """
    rows: list[dict] = []
    for start in range(0, episodes, EVAL_BATCH):
        n = min(EVAL_BATCH, episodes - start)
        cfg = _episode_env_cfg(env_cfg, n, seed, window)
        env = RotationEnv(cfg, cache, env_id_offset=start)
        obs = env.reset_all(distribution)
        controller.reset(n)

        alive = np.ones(n, dtype=bool)
        steps_alive = np.zeros(n, dtype=np.int64)
        dropped = np.zeros(n, dtype=bool)
        faulted = np.zeros(n, dtype=bool)
        rec = {
            k: np.zeros((n, cfg.episode_len)) for k in ("omega_k", "dtheta", "speed", "torque_l1")
        }
        params0 = env.params.copy_arrays()

        for t in range(cfg.episode_len):
            if swap_every and t > 0 and t % swap_every == 0:
                env.swap_params(np.arange(n), distribution)
            action = controller.act(obs, env, t)
            out = env.step(action)
            obs = out.obs
            for k in rec:
                rec[k][:, t] = out.info[k]
            steps_alive += alive
            newly_done = alive & out.done
            dropped |= newly_done & out.info["dropped"]
            faulted |= newly_done & out.info["fault"]
            if trace_hook is not None:
                trace_hook(env, controller, start + np.arange(n), t, alive)
            alive &= ~out.done
            if not alive.any() and trace_hook is None:
                break

        for i in range(n):
            s = int(steps_alive[i])
            m = compute_metrics(
                rec["omega_k"][i, :s],
                rec["dtheta"][i, :s],
                rec["speed"][i, :s],
                rec["torque_l1"][i, :s],
                cfg.episode_len,
                drop=bool(dropped[i]),
                fault=bool(faulted[i]),
            )
            row = m.as_row()
            row.update(
                episode=start + i,
                seed=seed,
                distribution=distribution,
                mass=float(params0.mass[i]),
                scale=float(params0.scale[i]),
                friction=float(params0.friction[i]),
                lobed=int(params0.lobe_m[i]),
            )
            rows.append(row)
    return rows


def evaluate(
    spec: VariantSpec,
    distribution: str,
    episodes: int,
    seeds: tuple[int, ...],
    env_cfg: EnvConfig,
    cache: GraspCache,
) -> EvalResult:
    """Per-seed episode batches; the reported mean/std are across seeds
    of the per-seed episode means."""
    all_rows: list[dict] = []
    per_seed: dict[int, dict] = {}
    for seed in seeds:
        controller = spec.make_controller()
        rows = run_episodes(
            controller, env_cfg, cache, episodes, seed, distribution, window=spec.window_len
        )
        all_rows.extend(rows)
        per_seed[seed] = {
            name: float(np.mean([r[name] for r in rows])) for name in METRIC_NAMES
        }
    mean = {
        name: float(np.mean([per_seed[s][name] for s in seeds])) for name in METRIC_NAMES
    }
    std = {
        name: float(np.std([per_seed[s][name] for s in seeds])) for name in METRIC_NAMES
    }
    return EvalResult(
        variant=spec.tag,
        distribution=distribution,
        rows=all_rows,
        per_seed=per_seed,
        mean=mean,
        std=std,
    )


def recompute_aggregate(rows: list[dict], seeds: tuple[int, ...]) -> dict[str, float]:
    """Rebuild the cross-seed means from raw episode rows (the metric
    pipeline is pure, so this must match EvalResult.mean exactly)."""
    per_seed = {
        s: {name: float(np.mean([r[name] for r in rows if r["seed"] == s])) for name in METRIC_NAMES}
        for s in seeds
    }
    return {name: float(np.mean([per_seed[s][name] for s in seeds])) for name in METRIC_NAMES}


def make_periodic(
    bundle: PolicyBundle,
    env_cfg: EnvConfig,
    cache: GraspCache,
    seed: int = 0,
    max_tries: int = 10,
) -> np.ndarray:
    """Records one full canonical-parameter episode of expert mean
    actions. Retries with a fresh grasp draw if the object drops."""
    for attempt in range(max_tries):
        cfg = dataclasses.replace(env_cfg)
        cfg.num_envs = 1
        cfg.seed = seed + 1000 * attempt
        cfg.no_randomization = True
        cfg.auto_reset = False
        cfg.eval_mode = False
        env = RotationEnv(cfg, cache)
        obs = env.reset_all("train")
        targets = np.zeros((cfg.episode_len, 16))
        ok = True
        for t in range(cfg.episode_len):
            e = env.privileged()
            z = encode_extrinsics(bundle, e) if bundle.kind != "dr" else None
            action, _ = policy_act(bundle, obs, z, "mean")
            out = env.step(action)
            targets[t] = np.clip(action[0], env.model.joint_lower, env.model.joint_upper)
            obs = out.obs
            if out.done[0] and t < cfg.episode_len - 1:
                ok = False
                break
        if ok:
            return targets
    raise ConfigError(f"expert dropped the object in all {max_tries} recording attempts")


TRACE_FIXED_COLUMNS = ("episode", "t", "mass", "scale", "friction", "contacts", "torque_l1")


def export_traces(
    spec: VariantSpec,
    env_cfg: EnvConfig,
    cache: GraspCache,
    episodes: int,
    seed: int,
    distribution: str = "train",
    swap_every: int | None = None,
) -> tuple[list[str], np.ndarray]:
    """Per-step estimator traces: (episode, t, z_hat..., true parameters,
    contact count, torque). Returns (header, rows); rows stop at each
    episode's first done."""
    controller = spec.make_controller()
    if not controller.uses_estimator:
        raise ConfigError(f"variant {spec.tag!r} has no estimator to trace")
    z_width = spec.estimator.out_width
    header = ["episode", "t"] + [f"z{i}" for i in range(z_width)] + [
        "mass", "scale", "friction", "contacts", "torque_l1",
    ]
    collected: list[np.ndarray] = []

    last_torque: dict[int, float] = {}

    def hook(env: RotationEnv, ctrl: Controller, episode_ids, t, alive):
        z = ctrl.current_estimate()
        idx = np.where(alive)[0]
        if len(idx) == 0:
            return
        block = np.empty((len(idx), len(header)))
        block[:, 0] = episode_ids[idx]
        block[:, 1] = t
        block[:, 2 : 2 + z_width] = z[idx]
        block[:, 2 + z_width] = env.params.mass[idx]
        block[:, 3 + z_width] = env.params.scale[idx]
        block[:, 4 + z_width] = env.params.friction[idx]
        block[:, 5 + z_width] = env.state.contact_active[idx].sum(axis=1)
        block[:, 6 + z_width] = env._last_torque_l1[idx]
        collected.append(block)

    rows = run_episodes(
        controller,
        env_cfg,
        cache,
        episodes,
        seed,
        distribution,
        window=spec.window_len,
        trace_hook=hook,
        swap_every=swap_every,
    )
    del rows
    if not collected:
        return header, np.zeros((0, len(header)))
    return header, np.concatenate(collected, axis=0)


def write_csv(path: str | Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        if isinstance(row, dict):
            values = [row[h] for h in header]
        else:
            values = row
        lines.append(",".join(_fmt(v) for v in values))
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{v:.6g}"
    return str(v)
