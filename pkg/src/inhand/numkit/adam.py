"""Adam optimizer over flat parameter lists."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, TrainingFault


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: list[np.ndarray], lr: float = 3e-4, **kw) -> "AdamState":
        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        return cls(m=m, v=v, step=0, lr=lr, **kw)


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState) -> None:
    """Bias-corrected Adam update, applied in place to params."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ConfigError("params/grads/state length mismatch")
    for g in grads:
        if not np.isfinite(g).all():
            raise TrainingFault("non-finite gradient passed to adam_step")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.step
    bc2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ConfigError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def global_grad_norm(grads: list[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads)))


def clip_grads_(grads: list[np.ndarray], max_norm: float) -> float:
    """Scales grads in place so the global norm is at most max_norm."""
    norm = global_grad_norm(grads)
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for g in grads:
            g *= scale
    return norm
