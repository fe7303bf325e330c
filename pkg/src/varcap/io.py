"""Flat binary container and CSV export for fields and masks.

Container layout, little-endian::

    magic    4 bytes  b"VCAP"
    version  uint8
    type     uint8    1 scalar, 2 exponent, 3 weight, 4 mask
    dim      uint8
    nodes    dim * uint32
    origin   dim * float64
    extent   dim * float64
    extra    exponent: p_minus, p_plus, log_holder_C (3 * float64)
             weight: dual check (uint8); mask: kind (uint8)
    payload  row-major float64 values, or np.packbits of the membership
"""

from __future__ import annotations

import io
import struct

import numpy as np

from .grid import ExponentField, GridDomain, RegionMask, ScalarField, WeightField

__all__ = ["write_container", "read_container", "to_bytes", "from_bytes",
           "field_csv", "trace_csv"]

MAGIC = b"VCAP"
VERSION = 1
_KINDS = ("compact", "open", "arbitrary")


def to_bytes(obj) -> bytes:
    if isinstance(obj, RegionMask):
        code = 4
    elif isinstance(obj, ExponentField):
        code = 2
    elif isinstance(obj, WeightField):
        code = 3
    elif isinstance(obj, ScalarField):
        code = 1
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")
    g = obj.grid
    out = [MAGIC, struct.pack("<BBB", VERSION, code, g.dim),
           struct.pack(f"<{g.dim}I", *g.nodes_per_axis),
           struct.pack(f"<{g.dim}d", *g.origin),
           struct.pack(f"<{g.dim}d", *g.extent)]
    if code == 2:
        out.append(struct.pack("<3d", obj.p_minus, obj.p_plus, obj.log_holder_C))
    elif code == 3:
        out.append(struct.pack("<B", int(obj.dual_integrable_check)))
    elif code == 4:
        out.append(struct.pack("<B", _KINDS.index(obj.kind)))
    if code == 4:
        out.append(np.packbits(obj.membership.ravel(order="C")).tobytes())
    else:
        out.append(np.ascontiguousarray(obj.values, dtype="<f8").tobytes())
    return b"".join(out)


def from_bytes(data: bytes):
    buf = io.BytesIO(data)

    def take(fmt):
        size = struct.calcsize(fmt)
        chunk = buf.read(size)
        if len(chunk) != size:
            raise ValueError("truncated container")
        return struct.unpack(fmt, chunk)

    if buf.read(4) != MAGIC:
        raise ValueError("not a field container")
    version, code, dim = take("<BBB")
    if version != VERSION:
        raise ValueError(f"unsupported container version {version}")
    nodes = take(f"<{dim}I")
    origin = take(f"<{dim}d")
    extent = take(f"<{dim}d")
    grid = GridDomain(dim, tuple(origin), tuple(extent), tuple(int(n) for n in nodes))
    shape = grid.shape
    size = int(np.prod(shape))
    if code == 2:
        pm, pp, lh = take("<3d")
    elif code in (3, 4):
        (flag,) = take("<B")
    rest = buf.read()
    if code == 4:
        bits = np.unpackbits(np.frombuffer(rest, dtype=np.uint8), count=size)
        return RegionMask(grid, bits.astype(bool).reshape(shape), _KINDS[flag])
    if len(rest) != 8 * size:
        raise ValueError("payload size does not match the grid")
    values = np.frombuffer(rest, dtype="<f8").reshape(shape)
    if code == 1:
        return ScalarField(grid, values)
    if code == 2:
        return ExponentField(grid, values, pm, pp, lh)
    if code == 3:
        return WeightField(grid, values, bool(flag))
    raise ValueError(f"unknown container type {code}")


def write_container(path, obj) -> None:
    with open(path, "wb") as fh:
        fh.write(to_bytes(obj))


def read_container(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def field_csv(obj, path=None) -> str:
    """Node coordinates and value, one row per node in row-major order."""
    g = obj.grid
    vals = obj.membership.astype(int) if isinstance(obj, RegionMask) else obj.values
    names = [f"x{k}" for k in range(g.dim)]
    lines = [",".join(names + ["value"])]
    pts = g.points
    flat = vals.ravel(order="C")
    for x, v in zip(pts, flat):
        coords = ",".join(repr(float(c)) for c in x)
        lines.append(f"{coords},{int(v)}" if isinstance(obj, RegionMask)
                     else f"{coords},{float(v)!r}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def trace_csv(trace, path=None) -> str:
    """Solver energy trace as ``iteration,energy`` rows."""
    text = "iteration,energy\n" + "".join(f"{i},{float(e)!r}\n" for i, e in enumerate(trace))
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
