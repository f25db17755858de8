"""Matrix and vector exchange formats.

Two formats are supported, chosen by file extension:

* ``.csv`` / ``.txt``: one matrix row per line, comma-separated decimals.
  A vector may be stored as a single row or a single column.
* ``.bin``: two little-endian uint64 dimensions (rows, cols) followed by
  ``rows * cols`` little-endian float64 values in row-major order.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import InputError

_HEADER = np.dtype("<u8")
_VALUES = np.dtype("<f8")


def _is_binary(path) -> bool:
    return os.fspath(path).lower().endswith(".bin")


def read_matrix(path) -> np.ndarray:
    try:
        if _is_binary(path):
            return _read_binary(path)
        data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except InputError:
        raise
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read matrix from {path}: {exc}") from exc
    return data


def read_vector(path) -> np.ndarray:
    M = read_matrix(path)
    if M.ndim != 2 or (M.shape[0] != 1 and M.shape[1] != 1):
        raise InputError(f"{path}: expected a single row or column, got shape {M.shape}")
    return M.ravel()


def write_matrix(path, M) -> None:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[None, :]
    if _is_binary(path):
        with open(path, "wb") as fh:
            fh.write(np.array(M.shape, dtype=_HEADER).tobytes())
            fh.write(np.ascontiguousarray(M, dtype=_VALUES).tobytes())
    else:
        # repr-precision floats so a CSV round trip is lossless
        with open(path, "w") as fh:
            for row in M:
                fh.write(",".join(repr(float(x)) for x in row))
                fh.write("\n")


def _read_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16:
        raise InputError(f"{path}: truncated header")
    rows, cols = (int(x) for x in np.frombuffer(raw[:16], dtype=_HEADER))
    body = raw[16:]
    if len(body) != rows * cols * 8:
        raise InputError(f"{path}: header says {rows}x{cols} but payload has {len(body)} bytes")
    return np.frombuffer(body, dtype=_VALUES).reshape(rows, cols).astype(np.float64)
