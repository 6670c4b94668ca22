"""Versioned binary checkpoints.

Layout: 8 magic bytes, u32 format version, u32 header length, UTF-8 JSON
header (algorithm, dims, named array shapes, step counter), the arrays as
little-endian float64 in header order, and a trailing SHA-256 over all
preceding bytes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"CAPSCKPT"
VERSION = 1


class CheckpointError(ValueError):
    """Unreadable, corrupt, or architecture-mismatched checkpoint."""


def save_checkpoint(path, algorithm: str, arrays: dict, meta: dict | None = None):
    """Write named float64 arrays plus metadata; order follows the dict."""
    path = Path(path)
    header = {
        "algorithm": algorithm,
        "arrays": [{"name": k, "shape": list(np.asarray(v).shape)}
                   for k, v in arrays.items()],
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = bytearray()
    payload += MAGIC
    payload += struct.pack("<II", VERSION, len(blob))
    payload += blob
    for v in arrays.values():
        payload += np.ascontiguousarray(v, dtype="<f8").tobytes()
    digest = hashlib.sha256(payload).digest()
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(digest)


def load_checkpoint(path) -> tuple[str, dict, dict]:
    """Returns (algorithm, arrays dict, meta dict); verifies the checksum."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < len(MAGIC) + 8 + 32:
        raise CheckpointError(f"{path}: truncated checkpoint")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CheckpointError(f"{path}: checksum mismatch (corrupt file)")
    if body[:len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic bytes")
    version, hlen = struct.unpack_from("<II", body, len(MAGIC))
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    off = len(MAGIC) + 8
    header = json.loads(body[off:off + hlen].decode("utf-8"))
    off += hlen
    arrays = {}
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(body, dtype="<f8", count=count, offset=off)
        arrays[spec["name"]] = arr.reshape(shape).copy()
        off += count * 8
    if off != len(body):
        raise CheckpointError(f"{path}: trailing bytes in checkpoint body")
    return header["algorithm"], arrays, header.get("meta", {})


def restore_trainer_params(trainer, arrays: dict) -> None:
    """Copy checkpoint arrays into a trainer built with a matching config."""
    own = trainer.parameter_arrays()
    if set(own.keys()) != set(arrays.keys()):
        raise CheckpointError(
            "checkpoint/architecture mismatch: parameter names differ "
            f"(expected {sorted(own)[:4]}..., got {sorted(arrays)[:4]}...)")
    for name, target in own.items():
        src = arrays[name]
        if target.shape != src.shape:
            raise CheckpointError(
                f"checkpoint/architecture mismatch on {name}: "
                f"{src.shape} vs {target.shape}")
        target[...] = src
