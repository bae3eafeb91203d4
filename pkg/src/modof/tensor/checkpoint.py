"""Binary checkpoint container.

Layout (all integers little-endian):
  8 bytes magic ``MODOFCKP``, u32 format version, 64 bytes vocabulary hash (hex),
  u32 metadata length + UTF-8 JSON metadata,
  u32 tensor count, then per tensor: u16 name length, name, u8 ndim, u32 dims...
  followed by every tensor payload as f64 in table order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"MODOFCKP"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


class VocabularyMismatch(CheckpointError):
    pass


def write_checkpoint(path, tensors: dict[str, np.ndarray], vocab_hash: str, meta: dict) -> None:
    if len(vocab_hash) != 64:
        raise CheckpointError("vocabulary hash must be 64 hex characters")
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION), vocab_hash.encode("ascii")]
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts += [struct.pack("<I", len(blob)), blob, struct.pack("<I", len(tensors))]
    for name, arr in tensors.items():
        nb = name.encode("utf-8")
        parts.append(struct.pack("<H", len(nb)) + nb + struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
    for arr in tensors.values():
        parts.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(b"".join(parts))
    tmp.replace(path)


def read_checkpoint(path, expect_vocab_hash: str | None = None):
    """Return (tensors, vocab_hash, meta)."""
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    pos = 8
    (version,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    vocab_hash = data[pos:pos + 64].decode("ascii")
    pos += 64
    if expect_vocab_hash is not None and vocab_hash != expect_vocab_hash:
        raise VocabularyMismatch(f"{path}: checkpoint vocabulary {vocab_hash[:12]} != {expect_vocab_hash[:12]}")
    (mlen,) = struct.unpack_from("<I", data, pos)
    pos += 4
    meta = json.loads(data[pos:pos + mlen].decode("utf-8"))
    pos += mlen
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    table = []
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + nlen].decode("utf-8")
        pos += nlen
        (ndim,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        table.append((name, shape))
    tensors = {}
    for name, shape in table:
        n = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f8", count=n, offset=pos).astype(np.float64).reshape(shape)
        pos += 8 * n
        tensors[name] = arr
    if pos != len(data):
        raise CheckpointError(f"{path}: {len(data) - pos} trailing bytes")
    return tensors, vocab_hash, meta
