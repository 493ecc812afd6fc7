"""
Binary and CSV serialization of grid fields.

Binary layout (little-endian)::

    offset  size  content
    0       4     magic b"TWFD"
    4       4     uint32 format version (1)
    8       4     uint32 dimension N
    12      4     uint32 points per axis n
    16      8     float64 half-width L
    24      4     uint32 discretization tag (0 spectral_periodic, 1 fd_dirichlet)
    28      4     uint32 number of components k (1 for a Field, 3 for a TriField)
    32      ...   k * n^N float64 values, component-major then row-major

CSV output has columns ``x1..xN`` followed by one column per component and is
meant for small grids only.
"""

import csv
import struct
from pathlib import Path

import numpy as np

from .exceptions import InputError
from .grid import DISCRETIZATIONS, GridSpec

MAGIC = b"TWFD"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdII")
CSV_MAX_NODES = 1 << 16


def write_fields(path, spec: GridSpec, values):
    """Write one field (shape ``n^N``) or a stack of fields to ``path``."""
    values = np.asarray(values, dtype="<f8")
    shape = (spec.points,) * spec.dimension
    if values.shape == shape:
        values = values[None]
    if values.shape[1:] != shape:
        raise ValueError(f"values of shape {values.shape} do not match grid {shape}")
    header = _HEADER.pack(MAGIC, VERSION, spec.dimension, spec.points, float(spec.half_width),
                          DISCRETIZATIONS.index(spec.discretization), values.shape[0])
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(values).tobytes(order="C"))
    return path


def read_fields(path):
    """Read a file written by :func:`write_fields`.

    Returns
    -------
    spec : GridSpec
    values : ndarray of shape (k, n, ..., n)
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read field file {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise InputError(f"{path}: truncated header")
    magic, version, dim, n, half, tag, ncomp = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise InputError(f"{path}: not a triwave field file (bad magic {magic!r})")
    if version != VERSION:
        raise InputError(f"{path}: unsupported format version {version}")
    if tag >= len(DISCRETIZATIONS):
        raise InputError(f"{path}: unknown discretization tag {tag}")
    expected = ncomp * n ** dim * 8
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise InputError(f"{path}: payload has {len(payload)} bytes, expected {expected}")
    try:
        spec = GridSpec(dimension=dim, half_width=half, points=n,
                        discretization=DISCRETIZATIONS[tag])
    except ValueError as exc:
        raise InputError(f"{path}: invalid grid header: {exc}") from exc
    values = np.frombuffer(payload, dtype="<f8").astype(float).reshape((ncomp,) + (n,) * dim)
    if not np.all(np.isfinite(values)):
        raise InputError(f"{path}: non-finite values in payload")
    return spec, values


def write_csv(path, grid, values, names=None):
    """Write nodal coordinates and field values as CSV (small grids only)."""
    values = np.asarray(values, dtype=float)
    if values.shape == grid.shape:
        values = values[None]
    if grid.size > CSV_MAX_NODES:
        raise ValueError(f"grid has {grid.size} nodes; CSV export is limited to {CSV_MAX_NODES}")
    if names is None:
        names = ["u", "v", "w"] if values.shape[0] == 3 else [f"f{i}" for i in range(values.shape[0])]
    cols = [x.ravel() for x in grid.coords] + [c.ravel() for c in values]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(grid.dimension)] + list(names))
        for row in zip(*cols):
            writer.writerow([repr(float(x)) for x in row])
    return Path(path)


def read_csv(path, grid):
    """Read the value columns of a CSV written by :func:`write_csv`."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read CSV {path}: {exc}") from exc
    if data.shape[0] != grid.size:
        raise InputError(f"{path}: {data.shape[0]} rows for a grid of {grid.size} nodes")
    vals = data[:, grid.dimension:].T
    return vals.reshape((vals.shape[0],) + grid.shape)
