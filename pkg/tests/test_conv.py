import numpy as np
import pytest

from inhand.errors import ConfigError, UsageError
from inhand.numkit import (
    AffineLayer,
    ConvLayer,
    ConvStack,
    DenseNet,
    check_conv,
    conv_kinks_ok,
    conv_output_length,
)

ADAPT_SPECS = [(32, 32, 9, 2), (32, 32, 5, 1), (32, 32, 5, 1)]


def test_temporal_geometry_for_default_stack():
    # floor((L - k) / s) + 1 applied to (9,2), (5,1), (5,1)
    assert conv_output_length(30, 9, 2) == 11
    assert conv_output_length(11, 5, 1) == 7
    assert conv_output_length(7, 5, 1) == 3
    rng = np.random.default_rng(0)
    stack = ConvStack.create(32, [32, 32], ADAPT_SPECS, 8, 30, rng)
    assert stack.temporal_lengths == [30, 11, 7, 3]
    assert stack.projection.in_width == 32 * 3  # flattened 96
    out = stack.apply(rng.normal(size=(30, 32)).astype(np.float32))
    assert out.shape == (8,)


def test_receptive_field_misfit_fails_at_construction():
    # 30-step stack on a 10-step history: 10 -> 1, then 1 - 5 < 0
    rng = np.random.default_rng(1)
    with pytest.raises(ConfigError):
        ConvStack.create(32, [32, 32], ADAPT_SPECS, 8, 10, rng)


def test_wrong_history_length_is_usage_error():
    rng = np.random.default_rng(2)
    stack = ConvStack.create(4, [4], [(4, 4, 3, 1)], 2, 6, rng)
    with pytest.raises(UsageError):
        stack.apply(np.zeros((5, 4), dtype=np.float32))


def test_identity_conv_passthrough():
    # kernel-1 stride-1 conv with identity weights, identity step encoder
    # and identity projection: non-negative input passes straight through
    c, t = 3, 4
    enc = DenseNet([AffineLayer(np.eye(c, dtype=np.float64), np.zeros(c), "identity")])
    conv = ConvLayer(np.eye(c, dtype=np.float64)[:, :, None], np.zeros(c), stride=1)
    proj = DenseNet(
        [AffineLayer(np.eye(t * c, dtype=np.float64), np.zeros(t * c), "identity")]
    )
    stack = ConvStack(enc, [conv], proj, history_len=t)
    x = np.arange(t * c, dtype=np.float64).reshape(t, c)
    assert np.allclose(stack.apply(x), x.reshape(-1))


def test_forward_deterministic():
    rng = np.random.default_rng(3)
    stack = ConvStack.create(6, [8, 8], [(8, 4, 3, 2)], 5, 9, rng)
    h = rng.normal(size=(2, 9, 6)).astype(np.float32)
    assert np.array_equal(stack.apply(h), stack.apply(h))


def test_conv_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    stack = ConvStack.create(3, [5, 5], [(5, 4, 3, 2), (4, 3, 2, 1)], 2, 9, rng, dtype=np.float64)
    h = rng.normal(size=(2, 9, 3))
    while not conv_kinks_ok(stack, h):
        h = rng.normal(size=h.shape)
    assert check_conv(stack, h) < 1e-4


def test_channel_mismatch_rejected():
    rng = np.random.default_rng(5)
    with pytest.raises(ConfigError):
        ConvStack.create(6, [8], [(4, 4, 3, 1)], 2, 8, rng)  # encoder emits 8, conv expects 4
