import struct

import numpy as np
import pytest

from inhand.errors import ConfigError
from inhand.numkit import ConvStack, DenseNet, load_arrays, save_arrays


def test_roundtrip(tmp_path):
    path = tmp_path / "net.nkpt"
    a = np.arange(6, dtype=np.float32).reshape(2, 3)
    b = np.array([1.5], dtype=np.float32)
    save_arrays(path, [("w", a, "elu"), ("b", b, "none")])
    loaded = load_arrays(path)
    assert set(loaded) == {"w", "b"}
    arr, tag = loaded["w"]
    assert tag == "elu" and np.array_equal(arr, a)
    arr, tag = loaded["b"]
    assert tag == "none" and np.array_equal(arr, b)


def test_byte_layout_is_as_documented(tmp_path):
    # parse the file with a raw reader that follows only the documented layout
    path = tmp_path / "layout.nkpt"
    w = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
    save_arrays(path, [("layer.weight", w, "tanh")])
    raw = path.read_bytes()
    assert raw[:6] == b"NKCKP1"
    version, count = struct.unpack_from("<HI", raw, 6)
    assert (version, count) == (1, 1)
    off = 12
    (nlen,) = struct.unpack_from("<H", raw, off)
    off += 2
    assert raw[off : off + nlen] == b"layer.weight"
    off += nlen
    (tlen,) = struct.unpack_from("<H", raw, off)
    off += 2
    assert raw[off : off + tlen] == b"tanh"
    off += tlen
    (ndim,) = struct.unpack_from("<B", raw, off)
    off += 1
    dims = struct.unpack_from(f"<{ndim}I", raw, off)
    off += 4 * ndim
    assert dims == (2, 2)
    values = struct.unpack_from("<4f", raw, off)
    assert values == (1.0, 2.0, 3.0, 4.0)  # row-major
    assert off + 16 == len(raw)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(ConfigError):
        load_arrays(path)


def test_dense_net_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    net = DenseNet.create([4, 8, 2], ["elu", "identity"], rng)
    path = tmp_path / "dense.nkpt"
    save_arrays(path, net.to_entries("policy"))
    restored = DenseNet.from_entries(load_arrays(path), "policy")
    x = rng.normal(size=(3, 4)).astype(np.float32)
    assert np.array_equal(net.apply(x), restored.apply(x))
    assert [l.activation for l in restored.layers] == ["elu", "identity"]


def test_conv_stack_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    stack = ConvStack.create(6, [8, 8], [(8, 4, 3, 2), (4, 4, 2, 1)], 5, 9, rng)
    path = tmp_path / "conv.nkpt"
    save_arrays(path, stack.to_entries("adapt"))
    restored = ConvStack.from_entries(load_arrays(path), "adapt")
    h = rng.normal(size=(2, 9, 6)).astype(np.float32)
    assert np.array_equal(stack.apply(h), restored.apply(h))
    assert restored.history_len == 9
    assert [l.stride for l in restored.conv_layers] == [2, 1]
