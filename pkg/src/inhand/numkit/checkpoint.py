"""Portable binary checkpoint format.

Byte layout (all integers little-endian, no padding):

    magic    6 bytes   b"NKCKP1"
    version  u16       currently 1
    count    u32       number of entries
    count descriptors, each:
        name_len  u16
        name      utf-8 bytes
        tag_len   u16
        tag       utf-8 bytes   (activation tag, or "none")
        ndim      u8
        dims      u32 * ndim    (row-major)
    count data blocks, in descriptor order:
        float32 little-endian, row-major, prod(dims) values

Readable from any language with a binary reader; nothing in the payload
is Python-specific.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import ConfigError

MAGIC = b"NKCKP1"
VERSION = 1


def save_arrays(path: str | Path, entries: list[tuple[str, np.ndarray, str]]) -> None:
    chunks = [MAGIC, struct.pack("<HI", VERSION, len(entries))]
    blocks = []
    for name, array, tag in entries:
        arr = np.ascontiguousarray(array, dtype=np.float32)
        nb = name.encode("utf-8")
        tb = tag.encode("utf-8")
        chunks.append(struct.pack("<H", len(nb)) + nb)
        chunks.append(struct.pack("<H", len(tb)) + tb)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        blocks.append(arr.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks) + b"".join(blocks))


def load_arrays(path: str | Path) -> dict[str, tuple[np.ndarray, str]]:
    data = Path(path).read_bytes()
    if data[:6] != MAGIC:
        raise ConfigError(f"{path}: not a checkpoint file (bad magic)")
    version, count = struct.unpack_from("<HI", data, 6)
    if version != VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version {version}")
    offset = 6 + 6
    descriptors = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (tag_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        tag = data[offset : offset + tag_len].decode("utf-8")
        offset += tag_len
        (ndim,) = struct.unpack_from("<B", data, offset)
        offset += 1
        dims = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        descriptors.append((name, tag, dims))
    out = {}
    for name, tag, dims in descriptors:
        n = int(np.prod(dims)) if dims else 1
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=offset).reshape(dims)
        offset += 4 * n
        out[name] = (arr.astype(np.float32).copy(), tag)
    return out
