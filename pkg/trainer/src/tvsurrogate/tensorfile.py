"""Reader and writer for the band tensor container.

This is a deliberately independent implementation of the producer's
format so the trainer has no import-level coupling to it. The layout is
frozen: an 8-byte magic, three header words, then a C-order float32
payload.

    offset  size  field
    0       8     magic "BANDTNSR"
    8       4     format version (u32, little endian) == 1
    12      4     dtype code (u32) == 1 for float32
    16      4     plane count n
    20      4     height h
    24      4     width w
    28      -     n*h*w little-endian float32 samples
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"BANDTNSR"
_VERSION = 1
_DTYPE_F32 = 1
_HEADER = struct.Struct("<8sIIIII")

__all__ = ["read_tensor", "write_tensor"]


def read_tensor(path) -> np.ndarray:
    """Read a 3-D float32 tensor, validating the header."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, dtype, n, h, w = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    if dtype != _DTYPE_F32:
        raise ValueError(f"{path}: unsupported dtype code {dtype}")
    expected = _HEADER.size + 4 * n * h * w
    if len(raw) != expected:
        raise ValueError(f"{path}: payload size {len(raw)} != expected {expected}")
    return np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, h, w)


def write_tensor(path, planes: np.ndarray) -> None:
    """Write a 3-D array as a float32 tensor file."""
    planes = np.ascontiguousarray(planes, dtype="<f4")
    if planes.ndim != 3:
        raise ValueError(f"tensor must be 3-D, got shape {planes.shape}")
    n, h, w = planes.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, _VERSION, _DTYPE_F32, n, h, w))
        fh.write(planes.tobytes())
