"""Binary container for datasets, oracle samples and model checkpoints.

Layout: one magic line naming the payload kind, one JSON header line
(manifest plus an ordered blob directory), then the blobs' float64
little-endian bytes back to back. Writing the same content twice yields
identical bytes, which the reproducibility contract relies on.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MAGIC_PREFIX = "INVBENCH/1 "


class StorageError(RuntimeError):
    pass


def write_blocks(path, kind: str, manifest: dict, blobs: dict) -> None:
    """Write `manifest` and named float64 arrays to `path`."""
    directory = []
    chunks = []
    for name, arr in blobs.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        directory.append({"name": name, "shape": list(arr.shape)})
        chunks.append(arr.tobytes())
    header = dict(manifest)
    header["blobs"] = directory
    header_line = json.dumps(header, sort_keys=True, separators=(",", ":"))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write((MAGIC_PREFIX + kind + "\n").encode("ascii"))
        fh.write(header_line.encode("utf-8"))
        fh.write(b"\n")
        for chunk in chunks:
            fh.write(chunk)


def read_blocks(path, expect_kind: str | None = None):
    """Return (manifest, {name: array}) from a block file."""
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii").rstrip("\n")
        if not magic.startswith(MAGIC_PREFIX):
            raise StorageError(f"{path}: not an invbench block file")
        kind = magic[len(MAGIC_PREFIX):]
        if expect_kind is not None and kind != expect_kind:
            raise StorageError(f"{path}: expected kind {expect_kind!r}, found {kind!r}")
        header = json.loads(fh.readline().decode("utf-8"))
        directory = header.pop("blobs")
        blobs = {}
        for entry in directory:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise StorageError(f"{path}: truncated blob {entry['name']!r}")
            blobs[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    return header, blobs
