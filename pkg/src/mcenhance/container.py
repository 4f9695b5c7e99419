"""Binary container: JSON manifest followed by raw float32 tensors.

Layout::

    bytes 0..3    magic b"MTC1"
    bytes 4..7    manifest length (uint32, little-endian)
    ...           manifest (UTF-8 JSON); must contain a "tensors" list of
                  {"name": str, "shape": [int, ...]} descriptors
    ...           tensor payloads, little-endian float32, row-major, in
                  manifest order

The same container backs both network weight bundles and NMF dictionary
files (distinguished by the manifest "type" tag).
"""

from __future__ import annotations

import json

import numpy as np

__all__ = ["ContainerFormatError", "MAGIC", "write_container", "read_container"]

MAGIC = b"MTC1"
_VERSION = 1


class ContainerFormatError(ValueError):
    """Malformed, truncated, or wrong-type container file."""


def write_container(path, manifest: dict, tensors: dict[str, np.ndarray]) -> None:
    """Write a container. ``manifest`` must not already define "tensors"."""
    manifest = dict(manifest)
    manifest["version"] = _VERSION
    manifest["tensors"] = [
        {"name": name, "shape": list(arr.shape)} for name, arr in tensors.items()
    ]
    header = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint32(len(header)).tobytes())
        fh.write(header)
        for arr in tensors.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def read_container(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a container; returns ``(manifest, {name: float32 array})``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise ContainerFormatError(f"{path}: bad magic, not a tensor container")
    header_len = int(np.frombuffer(blob[4:8], dtype="<u4")[0])
    if len(blob) < 8 + header_len:
        raise ContainerFormatError(f"{path}: truncated manifest")
    try:
        manifest = json.loads(blob[8:8 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerFormatError(f"{path}: unreadable manifest: {exc}") from exc
    if manifest.get("version") != _VERSION:
        raise ContainerFormatError(
            f"{path}: unsupported container version {manifest.get('version')!r}"
        )
    if "tensors" not in manifest:
        raise ContainerFormatError(f"{path}: manifest missing tensor list")

    tensors: dict[str, np.ndarray] = {}
    offset = 8 + header_len
    for desc in manifest["tensors"]:
        shape = tuple(int(s) for s in desc["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if offset + nbytes > len(blob):
            raise ContainerFormatError(
                f"{path}: truncated tensor payload for {desc['name']!r}"
            )
        arr = np.frombuffer(blob[offset:offset + nbytes], dtype="<f4")
        tensors[desc["name"]] = arr.reshape(shape).copy()
        offset += nbytes
    if offset != len(blob):
        raise ContainerFormatError(f"{path}: {len(blob) - offset} trailing bytes")
    return manifest, tensors
