"""Flat binary persistence of path batches.

Layout: a fixed little-endian header (magic, format version, n, replications,
column count, model hash) followed by the columns as contiguous float64
arrays. Column names and run metadata go to a JSON sidecar.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import PathBatch

MAGIC = b"CHXBATCH"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sIQQI32s")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_batch(path, batch: PathBatch, meta: dict | None = None) -> None:
    names = sorted(batch.columns)
    digest = bytes.fromhex(batch.model_hash)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, batch.n, len(batch), len(names), digest))
        for name in names:
            fh.write(np.ascontiguousarray(batch.columns[name], dtype="<f8").tobytes())
    side = {"columns": names, "n": batch.n, "replications": len(batch), "model_hash": batch.model_hash}
    side["meta"] = meta or {}
    sidecar_path(path).write_text(json.dumps(side, indent=2, sort_keys=True))


def read_batch(path) -> tuple[PathBatch, dict]:
    raw = Path(path).read_bytes()
    magic, version, n, reps, ncols, digest = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError("not a batch file")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported batch format version {version}")
    side = json.loads(sidecar_path(path).read_text())
    names = side["columns"]
    if len(names) != ncols or side["model_hash"] != digest.hex():
        raise ValueError("sidecar does not match batch header")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != ncols * reps:
        raise ValueError("batch file is truncated")
    cols = {name: data[i * reps : (i + 1) * reps].copy() for i, name in enumerate(names)}
    return PathBatch(n, digest.hex(), cols), side.get("meta", {})
