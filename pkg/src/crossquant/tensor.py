"""Dense float64 matrices and the QTN1 on-disk container.

A "matrix" throughout the package is a read-only 2-D ``numpy.ndarray`` of
dtype float64 with every element finite. :func:`as_matrix` is the single
entry point that enforces this.

QTN1 layout (little-endian)::

    0..3   b"QTN1"
    4      dtype code (0 = f32, 1 = f64)
    5      ndim, always 2
    6..7   zero padding
    8..23  rows, cols as uint64
    24..   row-major payload, exactly rows*cols elements
"""

from __future__ import annotations

import csv
import os
import struct
from pathlib import Path

import numpy as np

from .errors import TensorFormatError, TensorSizeError, TensorValidationError

MAGIC = b"QTN1"
DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
PRECISIONS = {"f32": 0, "f64": 1}
_HEADER = struct.Struct("<4sBBH")
_DIMS = struct.Struct("<QQ")


def as_matrix(data, *, copy: bool = True) -> np.ndarray:
    """Validate ``data`` and return it as an immutable float64 matrix.

    With ``copy=False`` an already read-only float64 input is returned as is.

    Raises :class:`TensorSizeError` for anything that is not a non-empty 2-D
    array and :class:`TensorValidationError` naming the first ``(row, col)``
    that holds NaN or an infinity.
    """
    arr = np.asarray(data, dtype=np.float64)
    if copy or arr.flags.writeable:
        # never freeze an array the caller may still write to
        arr = arr.copy()
    if arr.ndim != 2:
        raise TensorSizeError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise TensorSizeError(f"matrix dimensions must be positive, got {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        i, j = (int(v) for v in np.argwhere(bad)[0])
        raise TensorValidationError(f"non-finite value {arr[i, j]!r} at ({i}, {j})")
    arr.flags.writeable = False
    return arr


def save_tensor(m, path: str | os.PathLike, precision: str = "f64") -> None:
    """Write ``m`` as a QTN1 file. ``precision`` is ``"f32"`` or ``"f64"``."""
    if precision not in PRECISIONS:
        raise ValueError(f"precision must be 'f32' or 'f64', got {precision!r}")
    m = as_matrix(m, copy=False)
    code = PRECISIONS[precision]
    rows, cols = m.shape
    with np.errstate(over="ignore"):
        # out-of-range f32 values become inf and are caught on load
        payload = np.ascontiguousarray(m, dtype=DTYPE_CODES[code])
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, code, 2, 0))
            fh.write(_DIMS.pack(rows, cols))
            fh.write(payload.tobytes(order="C"))
    except OSError as exc:
        raise OSError(f"cannot write tensor to {os.fspath(path)}: {exc}") from exc


def _parse_qtn1(buf: bytes) -> np.ndarray:
    if len(buf) < _HEADER.size:
        raise TensorFormatError(f"header truncated: {len(buf)} bytes")
    magic, code, ndim, pad = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise TensorFormatError(f"magic: expected b'QTN1', got {magic!r}")
    if code not in DTYPE_CODES:
        raise TensorFormatError(f"dtype: unknown code {code}")
    if ndim != 2:
        raise TensorFormatError(f"ndim: expected 2, got {ndim}")
    if pad != 0:
        raise TensorFormatError(f"padding: expected zero bytes, got {pad:#06x}")
    if len(buf) < _HEADER.size + _DIMS.size:
        raise TensorFormatError("dims: header truncated")
    rows, cols = _DIMS.unpack_from(buf, _HEADER.size)
    if rows < 1 or cols < 1:
        raise TensorSizeError(f"dims must be positive, got ({rows}, {cols})")
    dtype = DTYPE_CODES[code]
    offset = _HEADER.size + _DIMS.size
    expected = rows * cols * dtype.itemsize
    have = len(buf) - offset
    if have < expected:
        raise TensorSizeError(
            f"payload holds {have} bytes, dims ({rows}, {cols}) need {expected}"
        )
    if have > expected:
        raise TensorFormatError(f"payload: {have - expected} trailing bytes")
    data = np.frombuffer(buf, dtype=dtype, count=rows * cols, offset=offset)
    return data.reshape(rows, cols).astype(np.float64)


def _parse_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(text.splitlines()) if r and any(c.strip() for c in r)]
    if not rows:
        raise TensorSizeError("CSV holds no rows")
    width = len(rows[0])
    out = []
    for i, r in enumerate(rows):
        if len(r) != width:
            raise TensorSizeError(f"CSV row {i} has {len(r)} fields, expected {width}")
        try:
            out.append([float(c) for c in r])
        except ValueError as exc:
            raise TensorFormatError(f"CSV row {i}: {exc}") from None
    return np.array(out, dtype=np.float64)


def load_tensor(path: str | os.PathLike) -> np.ndarray:
    """Read a QTN1 or CSV file into a validated float64 matrix.

    The format is sniffed from the leading magic bytes, so a CSV file may
    carry any extension.
    """
    buf = Path(path).read_bytes()
    if buf[:4] == MAGIC:
        arr = _parse_qtn1(buf)
    elif _looks_like_csv(path, buf):
        arr = _parse_csv(buf.decode("utf-8"))
    else:
        raise TensorFormatError(f"magic: {os.fspath(path)} is neither QTN1 nor CSV")
    return as_matrix(arr, copy=False)


def _looks_like_csv(path, buf: bytes) -> bool:
    if Path(path).suffix.lower() == ".csv":
        return True
    try:
        head = buf[:256].decode("utf-8")
    except UnicodeDecodeError:
        return False
    return all(ch in "0123456789+-.eEinfaINFA, \t\r\n" for ch in head)
