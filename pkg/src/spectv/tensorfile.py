"""Minimal binary container for band tensors.

Layout (all integers little-endian unsigned 32-bit):

    bytes 0..7    magic "BANDTNSR"
    bytes 8..11   format version (1)
    bytes 12..15  dtype code (1 = float32)
    bytes 16..19  number of planes (bands)
    bytes 20..23  height
    bytes 24..27  width
    bytes 28..    payload: planes * height * width float32, C order, LE

The format is deliberately trivial so that a consumer in any language
can parse it with a fixed 28-byte header read; round-trips are bit-exact.
"""

from __future__ import annotations

import struct

import numpy as np

__all__ = ["write_tensor", "read_tensor", "MAGIC", "VERSION"]

MAGIC = b"BANDTNSR"
VERSION = 1
_DTYPE_F32 = 1
_HEADER = struct.Struct("<8sIIIII")


def write_tensor(path, planes: np.ndarray) -> None:
    """Write a (planes, height, width) array as little-endian float32."""
    a = np.ascontiguousarray(planes, dtype="<f4")
    if a.ndim != 3:
        raise ValueError(f"tensor must be 3-D (planes, height, width), got {a.shape}")
    n, h, w = a.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, _DTYPE_F32, n, h, w))
        fh.write(a.tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    """Read and validate a band tensor file; returns float32 (n, h, w)."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, dtype, n, h, w = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        if dtype != _DTYPE_F32:
            raise ValueError(f"{path}: unsupported dtype code {dtype}")
        expected = n * h * w * 4
        payload = fh.read(expected + 1)
        if len(payload) != expected:
            raise ValueError(
                f"{path}: payload is {len(payload)} bytes, header declares {expected}"
            )
    return np.frombuffer(payload, dtype="<f4").reshape(n, h, w)
