"""Flat binary parameter checkpoints with a JSON sidecar.

Layout: ``MAGIC``, u32 version, u32 tensor count, then per tensor a u32
name length, UTF-8 name, u32 rank, u64 dims, and little-endian f64 data.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping, Union

import numpy as np

MAGIC = b"DGCKPT\x00\x01"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_arrays(path: Union[str, Path], arrays: Mapping[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(arrays)))
        for name, arr in arrays.items():
            raw = name.encode("utf-8")
            arr = np.asarray(arr, dtype="<f8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(np.ascontiguousarray(arr).tobytes())


def load_arrays(path: Union[str, Path]) -> dict[str, np.ndarray]:
    blob = Path(path).read_bytes()
    if not blob.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    pos = len(MAGIC)

    def read(fmt: str):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(blob):
            raise CheckpointError(f"{path}: truncated")
        vals = struct.unpack_from(fmt, blob, pos)
        pos += size
        return vals

    version, count = read("<II")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    out = {}
    for _ in range(count):
        (name_len,) = read("<I")
        name = blob[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (rank,) = read("<I")
        shape = read(f"<{rank}Q")
        nbytes = 8 * int(np.prod(shape, dtype=np.int64))
        if pos + nbytes > len(blob):
            raise CheckpointError(f"{path}: truncated payload for {name!r}")
        out[name] = np.frombuffer(blob, dtype="<f8", count=nbytes // 8, offset=pos).reshape(shape).copy()
        pos += nbytes
    return out


def save_checkpoint(directory: Union[str, Path], arrays: Mapping[str, np.ndarray], meta: dict) -> None:
    """Write ``params.bin`` and ``model.json`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_arrays(directory / "params.bin", arrays)
    (directory / "model.json").write_text(json.dumps(meta, indent=2, sort_keys=True), "utf-8")


def load_checkpoint(directory: Union[str, Path]) -> tuple[dict[str, np.ndarray], dict]:
    directory = Path(directory)
    meta = json.loads((directory / "model.json").read_text("utf-8"))
    return load_arrays(directory / "params.bin"), meta
