"""Feature, label and boundary file formats.

Binary feature layout (little-endian)::

    b"DSEG"  magic
    0x01     version
    0x00     reserved
    uint32   d
    uint64   n
    float64  n * d values, row-major
"""

from __future__ import annotations

import csv
import math
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"DSEG"
VERSION = 1
HEADER = struct.Struct("<4sBBIQ")


class FormatError(ValueError):
    """A feature or label file does not match its declared format."""


def detect_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".csv", ".txt"):
        return "csv"
    if suffix in (".bin", ".dseg"):
        return "binary"
    with open(path, "rb") as fh:
        return "binary" if fh.read(4) == MAGIC else "csv"


def _check_finite(X: np.ndarray, path) -> None:
    if not np.all(np.isfinite(X)):
        raise FormatError(f"{path}: non-finite values (NaN/Inf) in feature matrix")


def read_features(path, fmt: str | None = None) -> np.ndarray:
    fmt = fmt or detect_format(path)
    if fmt == "binary":
        return read_binary(path)
    if fmt == "csv":
        return read_csv(path)
    raise ValueError(f"unknown feature format {fmt!r}")


def write_features(path, X, fmt: str | None = None) -> None:
    fmt = fmt or ("csv" if Path(path).suffix.lower() in (".csv", ".txt") else "binary")
    if fmt == "binary":
        write_binary(path, X)
    elif fmt == "csv":
        write_csv(path, X)
    else:
        raise ValueError(f"unknown feature format {fmt!r}")


def encode_binary(X) -> bytes:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-d")
    n, d = X.shape
    return HEADER.pack(MAGIC, VERSION, 0, d, n) + X.astype("<f8").tobytes(order="C")


def decode_binary(buf: bytes, name="<bytes>") -> np.ndarray:
    if len(buf) < HEADER.size:
        raise FormatError(f"{name}: truncated header ({len(buf)} bytes)")
    magic, version, _, d, n = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"{name}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{name}: unsupported version {version}")
    expected = HEADER.size + 8 * n * d
    if len(buf) < expected:
        raise FormatError(f"{name}: truncated payload, expected {expected} bytes, got {len(buf)}")
    if len(buf) > expected:
        raise FormatError(f"{name}: {len(buf) - expected} trailing bytes after payload")
    X = np.frombuffer(buf, dtype="<f8", count=n * d, offset=HEADER.size).reshape(n, d)
    X = X.astype(np.float64)
    _check_finite(X, name)
    return X


def read_binary(path) -> np.ndarray:
    return decode_binary(Path(path).read_bytes(), name=str(path))


def write_binary(path, X) -> None:
    Path(path).write_bytes(encode_binary(X))


def read_csv(path) -> np.ndarray:
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise FormatError(f"{path}:{lineno}: ragged row, expected {width} values, got {len(values)}")
            rows.append(values)
    if not rows:
        raise FormatError(f"{path}: no feature rows")
    X = np.array(rows, dtype=np.float64)
    _check_finite(X, path)
    return X


def write_csv(path, X) -> None:
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        for row in X:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_labels(path) -> list[int]:
    """Dense labels from ``frame_index,label`` lines numbered consecutively from 0."""
    labels = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'frame_index,label'")
            try:
                frame, label = int(row[0]), int(row[1])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-integer field") from None
            if frame != len(labels):
                kind = "duplicate" if frame < len(labels) else "gap"
                raise FormatError(f"{path}:{lineno}: {kind} in frame_index (expected {len(labels)}, got {frame})")
            labels.append(label)
    return labels


def format_labels(labels: Sequence[int]) -> str:
    return "".join(f"{t},{int(v)}\n" for t, v in enumerate(labels))


def write_labels(path, labels: Sequence[int]) -> None:
    Path(path).write_text(format_labels(labels), encoding="utf-8")


def read_boundaries(path) -> list[int]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                out.append(int(line))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: boundary must be an integer frame index") from None
    return out


def format_boundaries(boundaries: Sequence[int]) -> str:
    return "".join(f"{int(b)}\n" for b in boundaries)


def write_boundaries(path, boundaries: Sequence[int]) -> None:
    Path(path).write_text(format_boundaries(boundaries), encoding="utf-8")


def iter_feature_rows(path, fmt: str | None = None):
    """Yield frames one at a time without loading the whole file."""
    fmt = fmt or detect_format(path)
    if fmt == "csv":
        width = None
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or all(not cell.strip() for cell in row):
                    continue
                try:
                    values = np.array([float(cell) for cell in row])
                except ValueError as exc:
                    raise FormatError(f"{path}:{lineno}: {exc}") from None
                if width is None:
                    width = values.size
                elif values.size != width:
                    raise FormatError(f"{path}:{lineno}: ragged row")
                if not np.all(np.isfinite(values)):
                    raise FormatError(f"{path}:{lineno}: non-finite value")
                yield values
        return
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
        if len(head) < HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, _, d, n = HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        for _ in range(n):
            chunk = fh.read(8 * d)
            if len(chunk) < 8 * d:
                raise FormatError(f"{path}: truncated payload")
            values = np.frombuffer(chunk, dtype="<f8").astype(np.float64)
            if not all(math.isfinite(v) for v in values):
                raise FormatError(f"{path}: non-finite value")
            yield values
