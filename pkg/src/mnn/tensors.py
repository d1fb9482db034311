"""Dense containers, unfold/fold plumbing, masks, and tensor file I/O.

Conventions used throughout the package:

* A matrix is a 2-D float64 ndarray, shape (n1, n2).
* An image stack is a 3-D float64 ndarray, shape (h, w, b): b bands of
  h x w planes.
* A sample mask is a boolean ndarray with the shape of the matrix it
  observes; True marks an observed entry.
* Plane vectorization is column-major (row index varies fastest), fixed
  globally so every unfold/fold pair and every operator agrees on it.

Binary tensor files ("MNNT") hold: 4-byte magic ``MNNT``, one u8 version
byte (currently 1), one u8 rank byte (2 or 3), rank u64 little-endian
dimensions, then the float64 little-endian payload scanned in C order
(last declared dimension fastest). Matrices can also travel as headerless
CSV, one row per line, locale-independent ``%.17g`` decimals so values
round-trip exactly.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DimensionError, FormatError, NumericsError, TruncationError

MAGIC = b"MNNT"
FORMAT_VERSION = 1


def _require_finite(arr, what):
    if not np.isfinite(arr).all():
        raise NumericsError(f"{what} contains non-finite entries")


def as_matrix(arr, what="matrix"):
    """Coerce to a float64 2-D array, validating shape and finiteness."""
    m = np.asarray(arr, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"{what} must be 2-D, got ndim={m.ndim}")
    _require_finite(m, what)
    return m


def as_stack(arr, what="stack"):
    """Coerce to a float64 3-D array, validating shape and finiteness."""
    s = np.asarray(arr, dtype=np.float64)
    if s.ndim != 3:
        raise DimensionError(f"{what} must be 3-D, got ndim={s.ndim}")
    _require_finite(s, what)
    return s


def unfold3(stack):
    """Flatten an (h, w, b) stack to an (h*w, b) matrix.

    Column j is band j vectorized column-major over (row, col), so the
    row index runs fastest. Exact inverse of :func:`fold3`.
    """
    stack = np.asarray(stack, dtype=np.float64)
    if stack.ndim != 3:
        raise DimensionError(f"unfold3 expects a 3-D stack, got ndim={stack.ndim}")
    h, w, b = stack.shape
    return stack.reshape(h * w, b, order="F").copy()


def fold3(m, h, w):
    """Reshape an (h*w, b) matrix back into an (h, w, b) stack."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"fold3 expects a matrix, got ndim={m.ndim}")
    if h < 1 or w < 1:
        raise DimensionError(f"fold3 needs positive plane dims, got {h}x{w}")
    if m.shape[0] != h * w:
        raise DimensionError(
            f"fold3: {m.shape[0]} rows cannot fold into {h}x{w} planes"
        )
    return m.reshape(h, w, m.shape[1], order="F").copy()


def apply_mask(m, mask):
    """Zero out unobserved entries: returns mask * m."""
    m = np.asarray(m, dtype=np.float64)
    mask = np.asarray(mask)
    if mask.shape != m.shape:
        raise DimensionError(
            f"mask shape {mask.shape} does not match data shape {m.shape}"
        )
    return np.where(mask, m, 0.0)


def write_tensor(path, arr):
    """Write a 2-D or 3-D float64 array in the MNNT binary format."""
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise DimensionError(f"tensor files hold 2-D or 3-D data, got ndim={arr.ndim}")
    _require_finite(arr, "tensor payload")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<BB", FORMAT_VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.astype("<f8").tobytes(order="C"))


def read_tensor(path):
    """Read an MNNT file back into a float64 array.

    Raises FormatError on a malformed header or trailing bytes, and
    TruncationError when the header promises more payload than the file
    holds.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}, expected {MAGIC!r}")
    if len(blob) < 6:
        raise TruncationError(f"{path}: header cut short")
    version, ndim = struct.unpack_from("<BB", blob, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if ndim not in (2, 3):
        raise FormatError(f"{path}: rank must be 2 or 3, got {ndim}")
    dims_end = 6 + 8 * ndim
    if len(blob) < dims_end:
        raise TruncationError(f"{path}: header declares {ndim} dims but ends early")
    dims = struct.unpack_from(f"<{ndim}Q", blob, 6)
    if any(d == 0 for d in dims):
        raise FormatError(f"{path}: zero dimension in {dims}")
    count = 1
    for d in dims:
        count *= d
    expected = dims_end + 8 * count
    if len(blob) < expected:
        raise TruncationError(
            f"{path}: payload holds {len(blob) - dims_end} bytes, header declares {8 * count}"
        )
    if len(blob) > expected:
        raise FormatError(f"{path}: {len(blob) - expected} trailing bytes")
    data = np.frombuffer(blob, dtype="<f8", count=count, offset=dims_end)
    arr = data.reshape(dims).astype(np.float64)
    _require_finite(arr, f"{path} payload")
    return arr


def write_matrix_csv(path, m):
    """Write a matrix as headerless CSV, one row per line."""
    m = as_matrix(m)
    np.savetxt(path, m, fmt="%.17g", delimiter=",")


def read_matrix_csv(path):
    """Read a headerless CSV matrix written by :func:`write_matrix_csv`."""
    try:
        m = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise FormatError(f"{path}: not a numeric CSV matrix ({exc})") from exc
    return as_matrix(m, what=str(path))
