"""Binary artifact format shared by encoder, teacher, and model checkpoints.

Layout: one JSON header line (sorted keys, compact separators, version and
tensor manifest) terminated by a newline, followed by the concatenation of
every tensor as IEEE-754 binary32 little-endian in manifest order.  Core
arrays are float64; they are truncated to 32-bit on save and widened on load,
so a save→load→save round trip is byte-stable.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import (
    CheckpointError,
    CheckpointShapeError,
    CheckpointVersionError,
    CorruptCheckpointError,
)

FORMAT_NAME = "affordkit-checkpoint"
FORMAT_VERSION = 1


def save_blob(path: str, kind: str, config: dict, tensors: dict[str, np.ndarray]) -> None:
    """Write named tensors plus a config dict; manifest order is dict order."""
    manifest = []
    payload = bytearray()
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype=np.float64)
        manifest.append({"name": name, "shape": list(arr.shape)})
        payload += arr.astype("<f4").tobytes(order="C")
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "config": config,
        "tensors": manifest,
    }
    line = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(line + b"\n")
        f.write(bytes(payload))


def load_blob(path: str) -> tuple[str, dict, dict[str, np.ndarray]]:
    """Read back (kind, config, tensors); tensors are float64 copies."""
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint file not found: {path}")
    with open(path, "rb") as f:
        raw = f.read()
    newline = raw.find(b"\n")
    if newline < 0:
        raise CorruptCheckpointError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptCheckpointError(f"{path}: unreadable header ({e})") from e
    if not isinstance(header, dict) or header.get("format") != FORMAT_NAME:
        raise CorruptCheckpointError(f"{path}: not a recognized checkpoint header")
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path}: format version {header.get('version')!r}, expected {FORMAT_VERSION}"
        )
    manifest = header.get("tensors", [])
    payload = raw[newline + 1:]
    expected = sum(int(np.prod(t["shape"], dtype=np.int64)) for t in manifest) * 4
    if len(payload) != expected:
        raise CorruptCheckpointError(
            f"{path}: payload is {len(payload)} bytes, manifest implies {expected}"
        )
    tensors: dict[str, np.ndarray] = {}
    offset = 0
    for t in manifest:
        shape = tuple(int(s) for s in t["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        flat = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        tensors[t["name"]] = flat.astype(np.float64).reshape(shape)
        offset += count * 4
    return header["kind"], header["config"], tensors


def require_kind(path: str, got: str, expected: str) -> None:
    if got != expected:
        raise CheckpointShapeError(f"{path}: holds a {got!r} artifact, expected {expected!r}")
