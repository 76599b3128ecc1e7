"""Observation-matrix file formats.

CSV: one observation per line, comma separated, no header.

Binary: 8-byte magic ``b"COVCPD01"``, then ``n`` and ``p`` as little-endian
uint64, then ``n * p`` little-endian float64 values in row-major order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .cusum import SegmentModel

MAGIC = b"COVCPD01"
_HEADER = struct.Struct("<8sQQ")


class DataFormatError(ValueError):
    pass


def write_binary(path, X) -> None:
    X = np.asarray(X, dtype="<f8")
    if X.ndim == 1:
        X = X[:, None]
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, X.shape[0], X.shape[1]))
        fh.write(np.ascontiguousarray(X).tobytes())


def read_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DataFormatError(f"{path}: truncated header")
    magic, n, p = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    body = raw[_HEADER.size:]
    if len(body) != 8 * n * p:
        raise DataFormatError(f"{path}: expected {n}x{p} values, found {len(body) // 8}")
    return np.frombuffer(body, dtype="<f8").reshape(n, p).astype(float)


def write_csv(path, X) -> None:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    np.savetxt(path, X, delimiter=",", fmt="%.17g")


def read_csv(path) -> np.ndarray:
    try:
        X = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from None
    if X.size == 0:
        raise DataFormatError(f"{path}: no observations")
    return X


def read_data(path) -> np.ndarray:
    """Read either format, sniffing the binary magic."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if not head:
        raise DataFormatError(f"{path}: empty file")
    return read_binary(path) if head == MAGIC else read_csv(path)


def save_model(path, model: SegmentModel) -> None:
    Path(path).write_text(json.dumps(model.to_dict()))


def load_model(path) -> SegmentModel:
    return SegmentModel.from_dict(json.loads(Path(path).read_text()))
