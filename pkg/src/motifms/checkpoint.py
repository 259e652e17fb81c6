"""Tensor checkpointing: a JSON manifest plus a raw binary payload.

The manifest lists tensor names, shapes, and dtypes in a fixed order; the
payload file holds each tensor's little-endian bytes concatenated in exactly
that order.  Writing the same tensors twice produces byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .autograd import Tensor

CHECKPOINT_FORMAT_VERSION = 1

_DTYPE_CODES = {"float32": "<f4", "float64": "<f8"}


class CheckpointError(ValueError):
    """Manifest/payload mismatch or unsupported format."""


def save_tensors(tensors: dict, manifest_path, payload_path, extra: dict | None = None) -> None:
    """Persist named tensors (Tensor or ndarray values), sorted by name."""
    entries = []
    chunks = []
    for name in sorted(tensors):
        value = tensors[name]
        array = value.data if isinstance(value, Tensor) else np.asarray(value)
        dtype_name = str(array.dtype)
        if dtype_name not in _DTYPE_CODES:
            raise CheckpointError(f"unsupported dtype {dtype_name} for tensor {name!r}")
        entries.append({
            "name": name,
            "shape": list(array.shape),
            "dtype": dtype_name,
        })
        chunks.append(np.ascontiguousarray(array, dtype=_DTYPE_CODES[dtype_name]).tobytes())
    manifest = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "tensors": entries,
        "extra": extra or {},
    }
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    with open(payload_path, "wb") as handle:
        for chunk in chunks:
            handle.write(chunk)


def load_tensors(manifest_path, payload_path) -> tuple[dict[str, np.ndarray], dict]:
    """Read tensors back; returns (name -> array, extra metadata)."""
    with open(manifest_path, "r", encoding="utf-8") as handle:
        manifest = json.load(handle)
    version = manifest.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format version {version!r}")
    with open(payload_path, "rb") as handle:
        payload = handle.read()
    tensors: dict[str, np.ndarray] = {}
    offset = 0
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        code = _DTYPE_CODES.get(entry["dtype"])
        if code is None:
            raise CheckpointError(f"unsupported dtype {entry['dtype']!r} in manifest")
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * int(code[-1])
        chunk = payload[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise CheckpointError(f"payload truncated at tensor {entry['name']!r}")
        tensors[entry["name"]] = np.frombuffer(chunk, dtype=code).reshape(shape).copy()
        offset += nbytes
    if offset != len(payload):
        raise CheckpointError(
            f"payload has {len(payload) - offset} trailing bytes not in the manifest"
        )
    return tensors, manifest.get("extra", {})
