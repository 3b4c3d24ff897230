"""Linear probes over estimator traces.

A probe regresses per-episode time-averaged estimates onto a physical
quantity with ordinary least squares and reports R^2; the torque-mass
relationship is summarized with a Spearman rank correlation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass
class ProbeReport:
    r2_mass: float
    r2_scale: float
    r2_mass_shuffled: float
    spearman_mass_torque: float
    episodes: int
    degenerate: bool = False


def ols_r2(features: np.ndarray, target: np.ndarray) -> float:
    """R^2 of an intercept-augmented least-squares fit."""
    x = np.column_stack([features, np.ones(len(features))])
    coef, *_ = np.linalg.lstsq(x, target, rcond=None)
    pred = x @ coef
    ss_res = float(np.sum((target - pred) ** 2))
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    if ss_tot <= 0.0:
        return 0.0
    return 1.0 - ss_res / ss_tot


def episode_features(header: list[str], trace: np.ndarray) -> dict[str, np.ndarray]:
    """Collapses a per-step trace table to per-episode rows: time-averaged
    estimates plus the episode's parameters and mean torque."""
    col = {name: i for i, name in enumerate(header)}
    z_cols = [i for i, name in enumerate(header) if name.startswith("z")]
    episodes = np.unique(trace[:, col["episode"]])
    feats, mass, scale, torque = [], [], [], []
    for ep in episodes:
        block = trace[trace[:, col["episode"]] == ep]
        feats.append(block[:, z_cols].mean(axis=0))
        mass.append(block[0, col["mass"]])
        scale.append(block[0, col["scale"]])
        torque.append(block[:, col["torque_l1"]].mean())
    return {
        "z_mean": np.asarray(feats),
        "mass": np.asarray(mass),
        "scale": np.asarray(scale),
        "torque": np.asarray(torque),
    }


def probe_extrinsics(header: list[str], trace: np.ndarray, shuffle_seed: int = 0) -> ProbeReport:
    """Requires traces spanning >= 20 distinct parameter draws."""
    ep = episode_features(header, trace)
    z, mass, scale, torque = ep["z_mean"], ep["mass"], ep["scale"], ep["torque"]
    n = len(mass)
    if n < 20:
        raise ValueError(f"need >= 20 episodes for a probe, got {n}")

    rank = np.linalg.matrix_rank(np.column_stack([z, np.ones(n)]))
    if rank < min(z.shape[1] + 1, n):
        return ProbeReport(0.0, 0.0, 0.0, 0.0, n, degenerate=True)

    shuffled = np.random.default_rng(shuffle_seed).permutation(mass)
    rho, _ = stats.spearmanr(mass, torque)
    return ProbeReport(
        r2_mass=ols_r2(z, mass),
        r2_scale=ols_r2(z, scale),
        r2_mass_shuffled=ols_r2(z, shuffled),
        spearman_mass_torque=float(rho),
        episodes=n,
    )
