"""Binary checkpoints of a distribution field.

Layout (all little-endian)::

    magic     8 bytes   b"DUGKSCKP"
    version   uint8
    dim       uint8
    set id    uint8     1 = D1Q3, 2 = D2Q9
    pad       uint8
    n         uint32    cells per axis
    steps     uint64    completed time steps
    count     uint64    number of stored values
    rt0       float64
    epsilon   float64
    tau       float64
    time      float64
    values    float64 * n**dim * q, C order (cells..., velocity)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import DistributionField, UniformPeriodicGrid
from .velocity_set import build_set

MAGIC = b"DUGKSCKP"
VERSION = 1
_HEADER = struct.Struct("<8sBBBxIQQdddd")
_SET_IDS = {"D1Q3": 1, "D2Q9": 2}
_SET_NAMES = {v: k for k, v in _SET_IDS.items()}
_SET_Q = {"D1Q3": 3, "D2Q9": 9}


class CheckpointError(IOError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class CheckpointExtentError(CheckpointError):
    pass


class CheckpointTruncatedError(CheckpointError):
    pass


def checkpoint_write(field: DistributionField, path, epsilon: float, tau: float = 1.0):
    path = Path(path)
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        field.grid.dim,
        _SET_IDS[field.vset.name],
        field.grid.n,
        field.steps,
        field.values.size,
        field.vset.rt0,
        float(epsilon),
        float(tau),
        field.time,
    )
    payload = np.ascontiguousarray(field.values, dtype="<f8").tobytes()
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    tmp.replace(path)


def checkpoint_read(path):
    """Load a checkpoint; returns ``(field, epsilon, tau)``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CheckpointTruncatedError(f"{path}: {len(data)} bytes is shorter than the header")
    magic, version, dim, set_id, n, steps, count, rt0, eps, tau, time = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic {magic!r})")
    if version != VERSION:
        raise CheckpointVersionError(f"{path}: format version {version}, expected {VERSION}")
    name = _SET_NAMES.get(set_id)
    if name is None:
        raise CheckpointError(f"{path}: unknown velocity set id {set_id}")
    q = _SET_Q[name]
    if dim not in (1, 2) or dim != (1 if name == "D1Q3" else 2) or n < 4:
        raise CheckpointExtentError(f"{path}: inconsistent extents dim={dim}, n={n}, set={name}")
    if count != n**dim * q:
        raise CheckpointExtentError(
            f"{path}: header stores {count} values but extents n={n}, dim={dim}, q={q} "
            f"imply {n**dim * q}"
        )
    body = len(data) - _HEADER.size
    if body < count * 8:
        raise CheckpointTruncatedError(f"{path}: {body} value bytes, expected {count * 8}")
    if body > count * 8:
        raise CheckpointExtentError(f"{path}: {body - count * 8} trailing bytes after the values")
    grid = UniformPeriodicGrid(dim, n)
    field = DistributionField(grid, build_set(name, rt0), time)
    field.steps = steps
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    field.values[...] = values.reshape(field.values.shape)
    return field, eps, tau
