"""Dense feed-forward networks with hand-derived gradients.

Row-vector convention throughout: inputs are (batch, width), weights are
(in_width, out_width), so a layer computes ``x @ W + b``. The closed set
of activations keeps the backward pass small enough to verify against
finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, UsageError

ACTIVATIONS = ("elu", "relu", "tanh", "identity")


def activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "elu":
        return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "identity":
        return z
    raise ConfigError(f"unknown activation {kind!r}")


def activate_grad(z: np.ndarray, kind: str) -> np.ndarray:
    """d activation / d z, evaluated elementwise at z."""
    if kind == "elu":
        return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    if kind == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    if kind == "identity":
        return np.ones_like(z)
    raise ConfigError(f"unknown activation {kind!r}")


@dataclass
class AffineLayer:
    weight: np.ndarray  # (in_width, out_width)
    bias: np.ndarray  # (out_width,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ConfigError(
                f"affine shapes do not compose: weight {self.weight.shape}, bias {self.bias.shape}"
            )
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise ConfigError("non-finite parameters in affine layer")


@dataclass
class DenseCache:
    """Activations recorded by forward, consumed once by backward."""

    token: int
    inputs: list[np.ndarray]  # input to each layer
    preacts: list[np.ndarray]  # pre-activation z of each layer
    output: np.ndarray


def init_affine(
    in_width: int, out_width: int, activation: str, rng: np.random.Generator, dtype=np.float32
) -> AffineLayer:
    """Kaiming-uniform (fan-in) for relu/elu, Xavier-uniform otherwise."""
    if activation in ("relu", "elu"):
        bound = np.sqrt(6.0 / in_width)
    else:
        bound = np.sqrt(6.0 / (in_width + out_width))
    w = rng.uniform(-bound, bound, size=(in_width, out_width)).astype(dtype)
    b = np.zeros(out_width, dtype=dtype)
    return AffineLayer(w, b, activation)


class DenseNet:
    """Stack of affine layers, each followed by its activation."""

    def __init__(self, layers: list[AffineLayer]):
        if not layers:
            raise ConfigError("empty network")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.weight.shape[1] != nxt.weight.shape[0]:
                raise ConfigError(
                    f"layer widths do not compose: {prev.weight.shape} -> {nxt.weight.shape}"
                )
        self.layers = layers

    @classmethod
    def create(
        cls,
        widths: list[int],
        activations: list[str],
        rng: np.random.Generator,
        dtype=np.float32,
    ) -> "DenseNet":
        """widths = [in, h1, ..., out]; one activation tag per layer."""
        if len(activations) != len(widths) - 1:
            raise ConfigError("need one activation per layer")
        layers = [
            init_affine(widths[i], widths[i + 1], activations[i], rng, dtype)
            for i in range(len(widths) - 1)
        ]
        return cls(layers)

    @property
    def in_width(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def out_width(self) -> int:
        return self.layers[-1].weight.shape[1]

    @property
    def dtype(self):
        return self.layers[0].weight.dtype

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend((layer.weight, layer.bias))
        return out

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, DenseCache]:
        x = np.asarray(x)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.shape[1] != self.in_width:
            raise ConfigError(f"input width {x.shape[1]} != expected {self.in_width}")
        inputs, preacts = [], []
        h = x.astype(self.dtype, copy=False)
        for layer in self.layers:
            inputs.append(h)
            z = h @ layer.weight + layer.bias
            preacts.append(z)
            h = activate(z, layer.activation)
        out = h[0] if squeeze else h
        return out, DenseCache(id(self), inputs, preacts, h)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(
        self, cache: DenseCache, grad_out: np.ndarray
    ) -> tuple[list[np.ndarray], np.ndarray]:
        """Returns (parameter gradients in parameters() order, input gradient)."""
        if cache.token != id(self) or len(cache.inputs) != len(self.layers):
            raise UsageError("backward called with a cache from a different network")
        grad_out = np.asarray(grad_out)
        squeeze = grad_out.ndim == 1
        if squeeze:
            grad_out = grad_out[None, :]
        if grad_out.shape != cache.output.shape:
            raise UsageError(
                f"grad_out shape {grad_out.shape} does not match cached output {cache.output.shape}"
            )
        grads: list[np.ndarray] = [None] * (2 * len(self.layers))
        g = grad_out.astype(self.dtype, copy=False)
        for i in reversed(range(len(self.layers))):
            layer = self.layers[i]
            dz = g * activate_grad(cache.preacts[i], layer.activation)
            grads[2 * i] = cache.inputs[i].T @ dz
            grads[2 * i + 1] = dz.sum(axis=0)
            g = dz @ layer.weight.T
        return grads, (g[0] if squeeze else g)

    def astype(self, dtype) -> "DenseNet":
        return DenseNet(
            [
                AffineLayer(l.weight.astype(dtype), l.bias.astype(dtype), l.activation)
                for l in self.layers
            ]
        )

    # ---- checkpoint entries -------------------------------------------------

    def to_entries(self, prefix: str) -> list[tuple[str, np.ndarray, str]]:
        entries = []
        for i, layer in enumerate(self.layers):
            entries.append((f"{prefix}.layer{i:02d}.weight", layer.weight, layer.activation))
            entries.append((f"{prefix}.layer{i:02d}.bias", layer.bias, layer.activation))
        return entries

    @classmethod
    def from_entries(cls, entries: dict, prefix: str) -> "DenseNet":
        layers = []
        i = 0
        while f"{prefix}.layer{i:02d}.weight" in entries:
            w, act = entries[f"{prefix}.layer{i:02d}.weight"]
            b, _ = entries[f"{prefix}.layer{i:02d}.bias"]
            layers.append(AffineLayer(w, b, act))
            i += 1
        if not layers:
            raise ConfigError(f"no layers found under prefix {prefix!r}")
        return cls(layers)
