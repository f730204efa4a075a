"""Binary and CSV formats for grid fields and trajectories.

Field dump layout (little endian)::

    magic   4 bytes  b"LVYF"
    version uint32
    dim     uint32
    n       uint32   points per axis
    length  float64  box length
    comps   uint32   1 for scalars, d for vectors
    complex uint32   1 if values are complex
    values  float64  row-major, complex values as (re, im) pairs

The trajectory format shares the header idea with magic ``b"LVYT"``, followed
by ``n_rows * n_cols`` float64 values and an optional jump table.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import GridField, PeriodicGrid

FIELD_MAGIC = b"LVYF"
TRAJ_MAGIC = b"LVYT"
VERSION = 1
_FIELD_HEADER = struct.Struct("<4sIIIdII")
_TRAJ_HEADER = struct.Struct("<4sIIIIQI")


def field_to_bytes(f: GridField) -> bytes:
    g = f.grid
    is_complex = not f.is_real
    head = _FIELD_HEADER.pack(FIELD_MAGIC, VERSION, g.dim, g.n, float(g.box_length),
                              f.components, int(is_complex))
    vals = np.ascontiguousarray(f.values)
    body = vals.astype("<c16" if is_complex else "<f8").tobytes(order="C")
    return head + body


def field_from_bytes(raw: bytes) -> GridField:
    if len(raw) < _FIELD_HEADER.size:
        raise ValueError("truncated field header")
    magic, version, dim, n, length, comps, is_complex = _FIELD_HEADER.unpack_from(raw)
    if magic != FIELD_MAGIC:
        raise ValueError("not a field dump")
    if version != VERSION:
        raise ValueError(f"unsupported field dump version {version}")
    grid = PeriodicGrid(dim, n, length)
    shape = grid.shape if comps == 1 else (comps,) + grid.shape
    dtype = "<c16" if is_complex else "<f8"
    count = int(np.prod(shape))
    vals = np.frombuffer(raw, dtype=dtype, count=count, offset=_FIELD_HEADER.size)
    return GridField(grid, vals.reshape(shape).astype(complex if is_complex else float))


def save_field(path, f: GridField) -> None:
    Path(path).write_bytes(field_to_bytes(f))


def load_field(path) -> GridField:
    return field_from_bytes(Path(path).read_bytes())


def save_field_csv(path, f: GridField, slice_index: int | None = None) -> None:
    """Write a 1-D field as ``x, value...`` rows and a 2-D field as ``x, y, value...``.

    3-D fields are sliced at ``slice_index`` along the last axis (default the
    middle plane, which contains ``x_3 = 0``).
    """
    g = f.grid
    data = f.stacked()
    coords = g.coords
    if g.dim == 3:
        k = g.n // 2 if slice_index is None else slice_index
        data = data[..., k]
        coords = coords[:2, ..., k]
    elif g.dim not in (1, 2):
        raise ValueError("unsupported dimension")
    names = ["x", "y"][: min(g.dim, 2)]
    vnames = ["value"] if data.shape[0] == 1 else [f"value_{i}" for i in range(data.shape[0])]
    if not f.is_real:
        vnames = [f"{v}_{part}" for v in vnames for part in ("re", "im")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + vnames)
        flat_c = coords.reshape(coords.shape[0], -1)
        flat_v = data.reshape(data.shape[0], -1)
        for i in range(flat_c.shape[1]):
            row = [repr(float(c)) for c in flat_c[:, i]]
            for v in flat_v[:, i]:
                if f.is_real:
                    row.append(repr(float(v)))
                else:
                    row += [repr(float(v.real)), repr(float(v.imag))]
            w.writerow(row)


def trajectory_to_bytes(times, states, increments, jump_times=None, jump_sizes=None,
                        seed: int = 0) -> bytes:
    """Pack ``times (n,)``, ``states (n, d)`` and ``increments (n-1, d)``.

    Rows hold ``t, x_1..x_d, dL_1..dL_d`` with the increment column of the
    last row set to zero. The jump table lists ``t, z_1..z_d`` per jump.
    """
    times = np.asarray(times, float)
    states = np.asarray(states, float).reshape(times.size, -1)
    d = states.shape[1]
    inc = np.zeros((times.size, d))
    inc[:-1] = np.asarray(increments, float).reshape(times.size - 1, d)
    jt = np.zeros(0) if jump_times is None else np.asarray(jump_times, float)
    jz = np.zeros((0, d)) if jump_sizes is None else np.asarray(jump_sizes, float).reshape(-1, d)
    head = _TRAJ_HEADER.pack(TRAJ_MAGIC, VERSION, d, times.size, 1 + 2 * d, int(seed) & (2**64 - 1),
                             jt.size)
    table = np.column_stack([times, states, inc]).astype("<f8").tobytes()
    jumps = np.column_stack([jt, jz]).astype("<f8").tobytes() if jt.size else b""
    return head + table + jumps


def trajectory_from_bytes(raw: bytes) -> dict:
    magic, version, d, n_rows, n_cols, seed, n_jumps = _TRAJ_HEADER.unpack_from(raw)
    if magic != TRAJ_MAGIC:
        raise ValueError("not a trajectory dump")
    if version != VERSION:
        raise ValueError(f"unsupported trajectory version {version}")
    off = _TRAJ_HEADER.size
    table = np.frombuffer(raw, "<f8", n_rows * n_cols, off).reshape(n_rows, n_cols)
    off += table.nbytes
    jumps = np.frombuffer(raw, "<f8", n_jumps * (d + 1), off).reshape(n_jumps, d + 1)
    return {"seed": seed, "times": table[:, 0].copy(), "states": table[:, 1:1 + d].copy(),
            "increments": table[:-1, 1 + d:].copy(), "jump_times": jumps[:, 0].copy(),
            "jump_sizes": jumps[:, 1:].copy()}
