"""Binary snapshot and trajectory files.

Field snapshot (.kp5f): magic "KP5F", version u32, then nx, ny, lx, ly as
little-endian f64, followed by row-major complex coefficients as interleaved
f64 pairs with the x index fastest.

Trajectory (.kp5t): magic "KP5T", then count, t0, dt as f64, followed by one
snapshot record per sample in the field format.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fields import Grid, SpectralField
from .propagator import FieldTrajectory

__all__ = ["write_field", "read_field", "write_trajectory", "read_trajectory"]

_FIELD_MAGIC = b"KP5F"
_TRAJ_MAGIC = b"KP5T"
_FIELD_VERSION = 1
_FIELD_HEAD = struct.Struct("<4sI4d")
_TRAJ_HEAD = struct.Struct("<4s3d")


def _field_bytes(f: SpectralField) -> bytes:
    g = f.grid
    head = _FIELD_HEAD.pack(_FIELD_MAGIC, _FIELD_VERSION,
                            float(g.nx), float(g.ny), g.lx, g.ly)
    # x index fastest: store the transpose contiguously
    payload = np.ascontiguousarray(f.coeffs.T).astype("<c16").tobytes()
    return head + payload


def write_field(f: SpectralField, path) -> None:
    Path(path).write_bytes(_field_bytes(f))


def _parse_field(buf: bytes, offset: int) -> tuple[SpectralField, int]:
    magic, version, fnx, fny, lx, ly = _FIELD_HEAD.unpack_from(buf, offset)
    if magic != _FIELD_MAGIC:
        raise ValueError(f"bad field magic {magic!r}")
    if version != _FIELD_VERSION:
        raise ValueError(f"unsupported field version {version}")
    if fnx != int(fnx) or fny != int(fny):
        raise ValueError("non-integral grid size in header")
    grid = Grid(int(fnx), int(fny), lx, ly)
    offset += _FIELD_HEAD.size
    count = grid.nx * grid.ny
    raw = np.frombuffer(buf, dtype="<c16", count=count, offset=offset)
    offset += count * 16
    coeffs = np.ascontiguousarray(raw.reshape(grid.ny, grid.nx).T).astype(np.complex128)
    return SpectralField(grid, coeffs), offset


def read_field(path) -> SpectralField:
    buf = Path(path).read_bytes()
    field, offset = _parse_field(buf, 0)
    if offset != len(buf):
        raise ValueError("trailing bytes after field payload")
    return field


def write_trajectory(traj: FieldTrajectory, path) -> None:
    parts = [_TRAJ_HEAD.pack(_TRAJ_MAGIC, float(traj.n_snapshots), traj.t0, traj.dt)]
    parts.extend(_field_bytes(traj.field(m)) for m in range(traj.n_snapshots))
    Path(path).write_bytes(b"".join(parts))


def read_trajectory(path) -> FieldTrajectory:
    buf = Path(path).read_bytes()
    magic, fcount, t0, dt = _TRAJ_HEAD.unpack_from(buf, 0)
    if magic != _TRAJ_MAGIC:
        raise ValueError(f"bad trajectory magic {magic!r}")
    if fcount != int(fcount) or int(fcount) < 2:
        raise ValueError("invalid snapshot count in header")
    offset = _TRAJ_HEAD.size
    fields = []
    for _ in range(int(fcount)):
        f, offset = _parse_field(buf, offset)
        fields.append(f)
    if offset != len(buf):
        raise ValueError("trailing bytes after trajectory payload")
    return FieldTrajectory.from_fields(fields, t0, dt)
