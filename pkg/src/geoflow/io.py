"""Artifact I/O: the GFL1 binary snapshot format and CSV helpers.

GFL1 layout (little-endian)::

    offset  size  field
    0       4     magic b"GFL1"
    4       4     u32 nx
    8       4     u32 ny
    12      4     u32 ncomp
    16      8     u64 reserved  (nz for 3D fields, 0 for 2D)
    24      8     padding (zero)
    32      ...   float64 samples, row-major over (nx, ny[, nz], ncomp)

Complex arrays are stored with ``ncomp = 2`` as interleaved (re, im) pairs.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

MAGIC = b"GFL1"
_HEADER = struct.Struct("<4sIIIQ8x")
assert _HEADER.size == 32


class FormatError(ValueError):
    pass


def write_gfl1(path, data: np.ndarray) -> Path:
    """Write ``data`` shaped ``(nx, ny[, nz], ncomp)`` or a complex ``(nx, ny)``.

    A 2D real array is stored with ``ncomp = 1``.
    """
    path = Path(path)
    a = np.asarray(data)
    if np.iscomplexobj(a):
        if a.ndim != 2:
            raise FormatError("complex arrays must be 2D")
        a = np.stack([a.real, a.imag], axis=-1)
    elif a.ndim == 2:
        a = a[..., None]
    if a.ndim == 3:
        nx, ny, ncomp = a.shape
        nz = 0
    elif a.ndim == 4:
        nx, ny, nz, ncomp = a.shape
    else:
        raise FormatError(f"unsupported array rank {a.ndim}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, nx, ny, ncomp, nz))
        fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return path


def read_gfl1(path, as_complex: bool = False) -> np.ndarray:
    """Read a GFL1 file; returns ``(nx, ny[, nz], ncomp)`` (or complex ``(nx, ny)``)."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("file shorter than the GFL1 header")
    magic, nx, ny, ncomp, nz = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    shape = (nx, ny, ncomp) if nz == 0 else (nx, ny, nz, ncomp)
    count = int(np.prod(shape))
    body = raw[_HEADER.size :]
    if len(body) != 8 * count:
        raise FormatError(f"payload has {len(body)} bytes, expected {8 * count}")
    a = np.frombuffer(body, dtype="<f8").reshape(shape).astype(float)
    if as_complex:
        if ncomp != 2 or nz != 0:
            raise FormatError("complex read needs a 2D file with ncomp = 2")
        return a[..., 0] + 1j * a[..., 1]
    return a


def write_csv(path, header: list[str], rows) -> Path:
    """CSV with a single header line; floats written with ``repr`` precision."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
