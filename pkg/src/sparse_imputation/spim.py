"""Reader and writer for the SPIM binary matrix format.

Layout (all little-endian)::

    bytes 0-3    b"SPIM"
    bytes 4-7    u32 format version (1)
    bytes 8-11   u32 rows
    bytes 12-15  u32 cols
    bytes 16-    rows*cols f64, column-major

Column-major means frame-contiguous for a K x T spectrogram, which is the same
ordering as :func:`sparse_imputation.dictionary.flatten_fragment`. A SPIM file
holding a K x R fragment is therefore byte-compatible with a dictionary column.
"""
from __future__ import annotations

import os
import struct

import numpy as np

MAGIC = b"SPIM"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class SpimFormatError(ValueError):
    pass


def encode_spim(matrix: np.ndarray) -> bytes:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2:
        raise SpimFormatError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise SpimFormatError("matrix contains non-finite values")
    rows, cols = m.shape
    payload = m.astype("<f8").tobytes(order="F")
    return _HEADER.pack(MAGIC, VERSION, rows, cols) + payload


def decode_spim(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise SpimFormatError("truncated SPIM header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SpimFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise SpimFormatError(f"unsupported SPIM version {version}")
    expected = 8 * rows * cols
    payload = data[_HEADER.size:]
    if len(payload) != expected:
        raise SpimFormatError(
            f"payload is {len(payload)} bytes, header implies {expected}")
    flat = np.frombuffer(payload, dtype="<f8")
    m = flat.reshape((rows, cols), order="F").astype(np.float64)
    if not np.all(np.isfinite(m)):
        raise SpimFormatError("matrix contains non-finite values")
    return m


def write_spim(path: str | os.PathLike, matrix: np.ndarray) -> None:
    data = encode_spim(matrix)
    with open(path, "wb") as fh:
        fh.write(data)


def read_spim(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_spim(fh.read())
