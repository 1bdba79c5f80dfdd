"""Flat binary and CSV serialization of grid fields.

Binary layout: 16-byte header = magic b"SGF2", u32 n_interior, u32 component
count (1 scalar / 2 vector), u32 reserved zero; then the components as
row-major little-endian float64 blocks (u1 block then u2 block for vectors).
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import Grid, ScalarField2D, VectorField2D

MAGIC = b"SGF2"
_HEADER = struct.Struct("<4sIII")


def write_field(path, f: ScalarField2D | VectorField2D) -> None:
    if isinstance(f, ScalarField2D):
        comps = [f.values]
    else:
        comps = [f.u1, f.u2]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, f.grid.n_interior, len(comps), 0))
        for c in comps:
            fh.write(np.ascontiguousarray(c, dtype="<f8").tobytes())


def read_field(path) -> ScalarField2D | VectorField2D:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated field file")
    magic, n, ncomp, reserved = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if reserved != 0:
        raise ValueError(f"{path}: nonzero reserved header word")
    if ncomp not in (1, 2):
        raise ValueError(f"{path}: unsupported component count {ncomp}")
    need = _HEADER.size + ncomp * n * n * 8
    if len(raw) != need:
        raise ValueError(f"{path}: expected {need} bytes, found {len(raw)}")
    grid = Grid(n)
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if ncomp == 1:
        return ScalarField2D(grid, body.reshape(n, n))
    u1 = body[: n * n].reshape(n, n)
    u2 = body[n * n:].reshape(n, n)
    return VectorField2D(grid, u1, u2)


def write_field_csv(path, f: ScalarField2D | VectorField2D) -> None:
    """Plot-friendly export: one row per node, x1,x2 then the value column(s)."""
    x1, x2 = f.grid.coords()
    if isinstance(f, ScalarField2D):
        header = ["x1", "x2", "value"]
        cols = [f.values]
    else:
        header = ["x1", "x2", "v1", "v2"]
        cols = [f.u1, f.u2]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        n = f.grid.n_interior
        for i in range(n):
            for j in range(n):
                row = [f"{x1[i, j]:.17g}", f"{x2[i, j]:.17g}"]
                row += [f"{c[i, j]:.17g}" for c in cols]
                w.writerow(row)
