import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dugks.checkpoint import (
    CheckpointError,
    CheckpointExtentError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    checkpoint_read,
    checkpoint_write,
)
from dugks.grid import DistributionField, UniformPeriodicGrid
from dugks.velocity_set import build_d1q3, build_d2q9

HEADER = 8 + 4 + 4 + 8 + 8 + 32


def _field(dim, n, seed=0):
    v = build_d2q9(0.5) if dim == 2 else build_d1q3(0.5)
    f = DistributionField(UniformPeriodicGrid(dim, n), v, time=1.25)
    f.values = np.random.default_rng(seed).standard_normal(f.values.shape)
    f.steps = 17
    return f


@settings(max_examples=20, deadline=None)
@given(dim=st.sampled_from([1, 2]), n=st.integers(4, 12), seed=st.integers(0, 100))
def test_round_trip_is_bitwise(tmp_path_factory, dim, n, seed):
    path = tmp_path_factory.mktemp("ck") / "f.bin"
    f = _field(dim, n, seed)
    checkpoint_write(f, path, 1e-3, 2.0)
    g, eps, tau = checkpoint_read(path)
    assert g.values.tobytes() == f.values.tobytes()
    assert (g.time, g.steps, g.grid.n, g.grid.dim, g.vset.name) == (1.25, 17, n, dim, f.vset.name)
    assert (eps, tau) == (1e-3, 2.0)
    assert path.stat().st_size == HEADER + f.values.size * 8


def test_header_layout(tmp_path):
    f = _field(2, 4)
    checkpoint_write(f, tmp_path / "f.bin", 0.5)
    raw = (tmp_path / "f.bin").read_bytes()
    assert raw[:8] == b"DUGKSCKP"
    assert raw[8] == 1 and raw[9] == 2 and raw[10] == 2
    assert struct.unpack_from("<I", raw, 12)[0] == 4


def _tamper(path, offset, fmt, value):
    raw = bytearray(path.read_bytes())
    struct.pack_into(fmt, raw, offset, value)
    path.write_bytes(bytes(raw))


def test_wrong_n_is_extent_error(tmp_path):
    p = tmp_path / "f.bin"
    checkpoint_write(_field(2, 6), p, 0.1)
    _tamper(p, 12, "<I", 7)
    with pytest.raises(CheckpointExtentError):
        checkpoint_read(p)


def test_version_mismatch(tmp_path):
    p = tmp_path / "f.bin"
    checkpoint_write(_field(1, 6), p, 0.1)
    _tamper(p, 8, "<B", 9)
    with pytest.raises(CheckpointVersionError):
        checkpoint_read(p)


def test_truncation(tmp_path):
    p = tmp_path / "f.bin"
    checkpoint_write(_field(2, 5), p, 0.1)
    raw = p.read_bytes()
    p.write_bytes(raw[:-8])
    with pytest.raises(CheckpointTruncatedError):
        checkpoint_read(p)
    p.write_bytes(raw[:20])
    with pytest.raises(CheckpointTruncatedError):
        checkpoint_read(p)


def test_trailing_bytes_and_magic(tmp_path):
    p = tmp_path / "f.bin"
    checkpoint_write(_field(2, 5), p, 0.1)
    raw = p.read_bytes()
    p.write_bytes(raw + b"\0" * 8)
    with pytest.raises(CheckpointExtentError):
        checkpoint_read(p)
    p.write_bytes(b"NOTACKPT" + raw[8:])
    with pytest.raises(CheckpointError, match="magic"):
        checkpoint_read(p)


def test_errors_are_distinct_types():
    kinds = {CheckpointVersionError, CheckpointExtentError, CheckpointTruncatedError}
    assert all(issubclass(k, CheckpointError) and issubclass(k, OSError) for k in kinds)
    assert len({k.__mro__[0] for k in kinds}) == 3
