"""Finite-difference verification of the analytic gradients.

The check perturbs every parameter element by +/- eps at float64, takes
the central difference of a scalar loss, and compares against the
backward pass. The loss is 0.5 * sum(out^2) so grad_out is just the
forward output.
"""

from __future__ import annotations

import numpy as np

from .conv import ConvStack
from .dense import DenseNet

FD_EPS = 1e-5
REL_TOL = 1e-4


def _loss_and_grad_out(out: np.ndarray) -> tuple[float, np.ndarray]:
    return 0.5 * float(np.sum(out.astype(np.float64) ** 2)), out


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst elementwise |a - n| / max(|a|, |n|), with an absolute floor
    so that near-zero pairs do not blow up the ratio."""
    a = analytic.astype(np.float64).ravel()
    n = numeric.astype(np.float64).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def _away_from_relu_kinks(preacts, activations, margin: float = 1e-3) -> bool:
    """Central differences are invalid within eps of a relu kink; callers
    resample such inputs."""
    for z, act in zip(preacts, activations):
        if act == "relu" and np.any(np.abs(z) < margin):
            return False
    return True


def dense_kinks_ok(net: DenseNet, x: np.ndarray) -> bool:
    _, cache = net.forward(x)
    return _away_from_relu_kinks(cache.preacts, [l.activation for l in net.layers])


def conv_kinks_ok(stack: ConvStack, history: np.ndarray) -> bool:
    _, cache = stack.forward(history)
    enc_acts = [l.activation for l in stack.step_encoder.layers]
    if not _away_from_relu_kinks(cache.step_cache.preacts, enc_acts):
        return False
    return _away_from_relu_kinks(cache.conv_preacts, ["relu"] * len(cache.conv_preacts))


def _numeric_grads(forward, params: list[np.ndarray], eps: float = FD_EPS) -> list[np.ndarray]:
    grads = []
    for p in params:
        g = np.zeros_like(p, dtype=np.float64)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi, _ = _loss_and_grad_out(forward())
            flat[i] = orig - eps
            lo, _ = _loss_and_grad_out(forward())
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * eps)
        grads.append(g)
    return grads


def check_dense(net: DenseNet, x: np.ndarray) -> float:
    """Max relative error between analytic and numeric gradients
    (parameters and the input), at float64."""
    net = net.astype(np.float64)
    x = x.astype(np.float64)
    out, cache = net.forward(x)
    _, grad_out = _loss_and_grad_out(out)
    analytic, dx = net.backward(cache, grad_out)

    numeric = _numeric_grads(lambda: net.forward(x)[0], net.parameters())
    worst = max(relative_error(a, n) for a, n in zip(analytic, numeric))

    nx = _numeric_grads(lambda: net.forward(x)[0], [x])[0]
    return max(worst, relative_error(dx, nx))


def check_conv(stack: ConvStack, history: np.ndarray) -> float:
    stack = stack.astype(np.float64)
    history = history.astype(np.float64)
    out, cache = stack.forward(history)
    _, grad_out = _loss_and_grad_out(out)
    analytic, dh = stack.backward(cache, grad_out)

    numeric = _numeric_grads(lambda: stack.forward(history)[0], stack.parameters())
    worst = max(relative_error(a, n) for a, n in zip(analytic, numeric))

    nh = _numeric_grads(lambda: stack.forward(history)[0], [history])[0]
    return max(worst, relative_error(dh, nh))


def run_suite(cases: int = 100, seed: int = 0) -> float:
    """Random small networks covering every activation and a conv stack
    per case family; returns the worst relative error seen."""
    worst = 0.0
    acts = ["elu", "relu", "tanh", "identity"]
    for case in range(cases):
        rng = np.random.default_rng(seed + case)
        depth = int(rng.integers(1, 4))
        widths = [int(rng.integers(2, 7)) for _ in range(depth + 1)]
        layer_acts = [acts[int(rng.integers(len(acts)))] for _ in range(depth)]
        # put the case's own activation family first so all four appear often
        layer_acts[0] = acts[case % len(acts)]
        net = DenseNet.create(widths, layer_acts, rng, dtype=np.float64)
        x = rng.normal(size=(int(rng.integers(1, 4)), widths[0]))
        while not dense_kinks_ok(net, x):
            x = rng.normal(size=x.shape)
        worst = max(worst, check_dense(net, x))

        if case % 4 == 0:
            t = int(rng.integers(6, 10))
            stack = ConvStack.create(
                step_in=3,
                step_widths=[4, 4],
                conv_specs=[(4, 3, 3, 2), (3, 3, 2, 1)],
                out_width=2,
                history_len=t,
                rng=rng,
                dtype=np.float64,
            )
            hist = rng.normal(size=(2, t, 3))
            while not conv_kinks_ok(stack.astype(np.float64), hist):
                hist = rng.normal(size=hist.shape)
            worst = max(worst, check_conv(stack, hist))
    return worst
