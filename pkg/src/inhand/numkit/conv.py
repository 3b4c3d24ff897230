"""Temporal 1-D convolution stack over fixed-length histories.

A ConvStack encodes each timestep with a small dense net, convolves the
resulting (T, channels) sequence along time, flattens, and projects to
the output width. Temporal geometry is validated at construction:
len_out = floor((len_in - kernel) / stride) + 1 must stay >= 1 for every
layer, so an impossible receptive field can never surface at run time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigError, UsageError
from .dense import DenseNet, init_affine, AffineLayer


def conv_output_length(length: int, kernel: int, stride: int) -> int:
    return (length - kernel) // stride + 1


@dataclass
class ConvLayer:
    weight: np.ndarray  # (out_channels, in_channels, kernel)
    bias: np.ndarray  # (out_channels,)
    stride: int

    @property
    def kernel(self) -> int:
        return self.weight.shape[2]


@dataclass
class ConvCache:
    token: int
    step_cache: object
    conv_inputs: list[np.ndarray]  # input sequence to each conv layer (N, L, C)
    conv_preacts: list[np.ndarray]
    flat: np.ndarray
    proj_cache: object
    batch: int


class ConvStack:
    def __init__(
        self,
        step_encoder: DenseNet,
        conv_layers: list[ConvLayer],
        projection: DenseNet,
        history_len: int,
    ):
        self.step_encoder = step_encoder
        self.conv_layers = conv_layers
        self.projection = projection
        self.history_len = history_len

        length = history_len
        channels = step_encoder.out_width
        self.temporal_lengths = [length]
        for i, layer in enumerate(conv_layers):
            if layer.weight.shape[1] != channels:
                raise ConfigError(
                    f"conv layer {i}: in_channels {layer.weight.shape[1]} != {channels}"
                )
            length = conv_output_length(length, layer.kernel, layer.stride)
            if length < 1:
                raise ConfigError(
                    f"conv layer {i}: kernel {layer.kernel}/stride {layer.stride} does not fit "
                    f"temporal length {self.temporal_lengths[-1]}"
                )
            channels = layer.weight.shape[0]
            self.temporal_lengths.append(length)
        flat = length * channels
        if self.projection.in_width != flat:
            raise ConfigError(
                f"projection expects {self.projection.in_width}, conv output flattens to {flat}"
            )

    @classmethod
    def create(
        cls,
        step_in: int,
        step_widths: list[int],
        conv_specs: list[tuple[int, int, int, int]],
        out_width: int,
        history_len: int,
        rng: np.random.Generator,
        dtype=np.float32,
    ) -> "ConvStack":
        """conv_specs entries are (in_channels, out_channels, kernel, stride)."""
        # validate temporal geometry up front so misfits fail before any alloc
        length = history_len
        for i, (_, _, k, s) in enumerate(conv_specs):
            length = conv_output_length(length, k, s)
            if length < 1:
                raise ConfigError(
                    f"conv layer {i}: kernel {k}/stride {s} does not fit history {history_len}"
                )
        enc = DenseNet.create(
            [step_in] + step_widths, ["relu"] * len(step_widths), rng, dtype
        )
        layers = []
        for cin, cout, k, s in conv_specs:
            bound = np.sqrt(6.0 / (cin * k))
            w = rng.uniform(-bound, bound, size=(cout, cin, k)).astype(dtype)
            layers.append(ConvLayer(w, np.zeros(cout, dtype=dtype), s))
        flat = length * conv_specs[-1][1] if conv_specs else history_len * step_widths[-1]
        proj = DenseNet([init_affine(flat, out_width, "identity", rng, dtype)])
        return cls(enc, layers, proj, history_len)

    @property
    def step_in_width(self) -> int:
        return self.step_encoder.in_width

    @property
    def out_width(self) -> int:
        return self.projection.out_width

    def parameters(self) -> list[np.ndarray]:
        params = self.step_encoder.parameters()
        for layer in self.conv_layers:
            params.extend((layer.weight, layer.bias))
        params.extend(self.projection.parameters())
        return params

    def forward(self, history: np.ndarray) -> tuple[np.ndarray, ConvCache]:
        """history: (T, D) or (N, T, D) with T == history_len."""
        history = np.asarray(history)
        squeeze = history.ndim == 2
        if squeeze:
            history = history[None]
        n, t, d = history.shape
        if t != self.history_len:
            raise UsageError(f"history length {t} != configured {self.history_len}")
        if d != self.step_in_width:
            raise ConfigError(f"per-step width {d} != expected {self.step_in_width}")

        steps, step_cache = self.step_encoder.forward(history.reshape(n * t, d))
        x = steps.reshape(n, t, self.step_encoder.out_width)

        conv_inputs, conv_preacts = [], []
        for layer in self.conv_layers:
            conv_inputs.append(x)
            windows = sliding_window_view(x, layer.kernel, axis=1)[:, :: layer.stride]
            # windows: (N, L_out, C_in, K); weight: (C_out, C_in, K)
            z = np.tensordot(windows, layer.weight, axes=([2, 3], [1, 2])) + layer.bias
            conv_preacts.append(z)
            x = np.maximum(z, 0.0)

        flat = x.reshape(n, -1)
        out, proj_cache = self.projection.forward(flat)
        cache = ConvCache(id(self), step_cache, conv_inputs, conv_preacts, flat, proj_cache, n)
        return (out[0] if squeeze else out), cache

    def apply(self, history: np.ndarray) -> np.ndarray:
        return self.forward(history)[0]

    def backward(
        self, cache: ConvCache, grad_out: np.ndarray
    ) -> tuple[list[np.ndarray], np.ndarray]:
        """Returns (gradients in parameters() order, gradient w.r.t. history)."""
        if cache.token != id(self):
            raise UsageError("backward called with a cache from a different stack")
        grad_out = np.asarray(grad_out)
        squeeze = grad_out.ndim == 1
        if squeeze:
            grad_out = grad_out[None]

        proj_grads, dflat = self.projection.backward(cache.proj_cache, grad_out)
        n = cache.batch
        last_len = self.temporal_lengths[-1]
        g = dflat.reshape(n, last_len, -1)

        conv_grads: list[np.ndarray] = []
        for i in reversed(range(len(self.conv_layers))):
            layer = self.conv_layers[i]
            x_in = cache.conv_inputs[i]
            dz = g * (cache.conv_preacts[i] > 0)
            db = dz.sum(axis=(0, 1))
            windows = sliding_window_view(x_in, layer.kernel, axis=1)[:, :: layer.stride]
            dw = np.einsum("nlik,nlo->oik", windows, dz)
            dx = np.zeros_like(x_in)
            l_out = dz.shape[1]
            for k in range(layer.kernel):
                # input slice feeding kernel tap k across all output positions
                sl = slice(k, k + layer.stride * l_out, layer.stride)
                dx[:, sl, :] += dz @ layer.weight[:, :, k]
            conv_grads[:0] = [dw, db]
            g = dx

        t = self.history_len
        step_grads, dsteps = self.step_encoder.backward(
            cache.step_cache, g.reshape(n * t, -1)
        )
        dhistory = dsteps.reshape(n, t, self.step_in_width)
        grads = step_grads + conv_grads + proj_grads
        return grads, (dhistory[0] if squeeze else dhistory)

    def astype(self, dtype) -> "ConvStack":
        layers = [
            ConvLayer(l.weight.astype(dtype), l.bias.astype(dtype), l.stride)
            for l in self.conv_layers
        ]
        return ConvStack(
            self.step_encoder.astype(dtype), layers, self.projection.astype(dtype), self.history_len
        )

    # ---- checkpoint entries -------------------------------------------------

    def to_entries(self, prefix: str) -> list[tuple[str, np.ndarray, str]]:
        entries = self.step_encoder.to_entries(f"{prefix}.step")
        for i, layer in enumerate(self.conv_layers):
            entries.append((f"{prefix}.conv{i:02d}.weight", layer.weight, f"stride{layer.stride}"))
            entries.append((f"{prefix}.conv{i:02d}.bias", layer.bias, f"stride{layer.stride}"))
        entries.extend(self.projection.to_entries(f"{prefix}.proj"))
        entries.append(
            (f"{prefix}.history_len", np.array([self.history_len], dtype=np.float32), "none")
        )
        return entries

    @classmethod
    def from_entries(cls, entries: dict, prefix: str) -> "ConvStack":
        enc = DenseNet.from_entries(entries, f"{prefix}.step")
        layers = []
        i = 0
        while f"{prefix}.conv{i:02d}.weight" in entries:
            w, tag = entries[f"{prefix}.conv{i:02d}.weight"]
            b, _ = entries[f"{prefix}.conv{i:02d}.bias"]
            layers.append(ConvLayer(w, b, int(tag.removeprefix("stride"))))
            i += 1
        proj = DenseNet.from_entries(entries, f"{prefix}.proj")
        hist, _ = entries[f"{prefix}.history_len"]
        return cls(enc, layers, proj, int(hist[0]))
