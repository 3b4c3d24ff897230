import numpy as np
import pytest

from inhand.errors import ConfigError, UsageError
from inhand.numkit import AffineLayer, DenseNet, check_dense, dense_kinks_ok


def _net(w, b, act):
    return DenseNet([AffineLayer(np.asarray(w, dtype=np.float64), np.asarray(b, dtype=np.float64), act)])


def test_identity_passthrough():
    net = _net(np.eye(2), [0.0, 0.0], "identity")
    assert np.allclose(net.apply(np.array([1.0, 2.0])), [1.0, 2.0])


def test_relu_clips_negative():
    net = _net([[-1.0]], [0.0], "relu")
    assert net.apply(np.array([3.0])) == pytest.approx([0.0])


def test_elu_negative_branch():
    net = _net([[1.0]], [0.0], "elu")
    out = net.apply(np.array([-1.0]))
    assert out == pytest.approx([np.expm1(-1.0)])  # ~ -0.6321


def test_linear_weight_gradient_is_outer_product():
    net = _net([[2.0], [3.0]], [0.0], "identity")
    x = np.array([0.5, -1.5])
    _, cache = net.forward(x)
    grads, dx = net.backward(cache, np.array([1.0]))
    assert np.allclose(grads[0], np.outer(x, 1.0))
    assert np.allclose(grads[1], [1.0])
    assert np.allclose(dx, [2.0, 3.0])


def test_zero_grad_out_gives_zero_grads():
    rng = np.random.default_rng(0)
    net = DenseNet.create([3, 5, 2], ["elu", "identity"], rng)
    out, cache = net.forward(rng.normal(size=(4, 3)).astype(np.float32))
    grads, dx = net.backward(cache, np.zeros_like(out))
    assert all(np.all(g == 0) for g in grads)
    assert np.all(dx == 0)


def test_forward_deterministic_bitwise():
    rng = np.random.default_rng(1)
    net = DenseNet.create([6, 8, 4], ["tanh", "elu"], rng)
    x = rng.normal(size=(5, 6)).astype(np.float32)
    a = net.apply(x)
    b = net.apply(x)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("acts", [["elu", "identity"], ["relu", "tanh"], ["tanh", "elu"]])
def test_gradients_match_finite_differences(acts):
    rng = np.random.default_rng(hash(tuple(acts)) % 2**32)
    net = DenseNet.create([4, 6, 3], acts, rng, dtype=np.float64)
    x = rng.normal(size=(3, 4))
    while not dense_kinks_ok(net, x):
        x = rng.normal(size=(3, 4))
    assert check_dense(net, x) < 1e-4


def test_stale_cache_rejected():
    rng = np.random.default_rng(2)
    net_a = DenseNet.create([3, 2], ["identity"], rng)
    net_b = DenseNet.create([3, 2], ["identity"], rng)
    out, cache = net_a.forward(rng.normal(size=(2, 3)).astype(np.float32))
    with pytest.raises(UsageError):
        net_b.backward(cache, out)
    with pytest.raises(UsageError):
        net_a.backward(net_a.forward(rng.normal(size=(5, 3)).astype(np.float32))[1], out)


def test_shape_mismatch_is_config_error():
    rng = np.random.default_rng(3)
    net = DenseNet.create([3, 2], ["identity"], rng)
    with pytest.raises(ConfigError):
        net.apply(np.zeros((2, 4)))
    with pytest.raises(ConfigError):
        DenseNet(
            [
                AffineLayer(np.zeros((3, 2), dtype=np.float32), np.zeros(2, dtype=np.float32), "relu"),
                AffineLayer(np.zeros((5, 1), dtype=np.float32), np.zeros(1, dtype=np.float32), "relu"),
            ]
        )
    with pytest.raises(ConfigError):
        AffineLayer(np.full((2, 2), np.nan), np.zeros(2), "relu")
    with pytest.raises(ConfigError):
        AffineLayer(np.zeros((2, 2)), np.zeros(2), "gelu")
