"""Binary TT3D tensor files.

Layout (all little-endian)::

    b"TT3D" | u32 version (=1) | u64 n1 | u64 n2 | u64 n3 | n1*n2*n3 float64

Values are column-major inside each frontal slice, slices in order.
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .errors import BadMagic, BadVersion, NonFiniteValue, TruncatedFile
from .tensor import as_tensor3

MAGIC = b"TT3D"
VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")


def write_tt3d(t, path) -> None:
    t = as_tensor3(t)
    if np.iscomplexobj(t):
        raise TypeError("TT3D stores real tensors only")
    if not np.all(np.isfinite(t)):
        raise NonFiniteValue("refusing to write NaN/Inf")
    n1, n2, n3 = t.shape
    with open(os.fspath(path), "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n1, n2, n3))
        fh.write(np.asarray(t, dtype="<f8").ravel(order="F").tobytes())


def read_tt3d(path) -> np.ndarray:
    with open(os.fspath(path), "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagic(f"{path}: not a TT3D file")
    if len(raw) < _HEADER.size:
        raise TruncatedFile(f"{path}: header is {len(raw)} bytes, need {_HEADER.size}")
    _, version, n1, n2, n3 = _HEADER.unpack_from(raw)
    if version != VERSION:
        raise BadVersion(f"{path}: version {version}, only {VERSION} is supported")
    count = n1 * n2 * n3
    need = _HEADER.size + 8 * count
    if len(raw) < need:
        raise TruncatedFile(f"{path}: {len(raw)} bytes, header promises {need}")
    values = np.frombuffer(raw, dtype="<f8", count=count, offset=_HEADER.size)
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue(f"{path}: contains NaN or Inf")
    return values.astype(np.float64).reshape((n1, n2, n3), order="F")
