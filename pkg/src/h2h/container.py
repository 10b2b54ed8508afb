"""Binary and CSV containers for feature matrices and classifier weights.

Layout (all integers little-endian u32, all reals little-endian float64)::

    magic   4 bytes   b"H2HF" (features) or b"H2HW" (weights)
    version u32       currently 1
    rows    u32       d for features, c for weights
    cols    u32       n
    data    rows*cols float64, column-major

Weight files continue with::

    eta     float64
    count   u32       number of class names (== rows)
    count x (length u32, UTF-8 bytes)
"""

import csv
import struct

import numpy as np

from .classifier import ClassifierWeights
from .errors import FormatError

FEATURE_MAGIC = b"H2HF"
WEIGHT_MAGIC = b"H2HW"
VERSION = 1
_HEADER = struct.Struct("<4sIII")
_U32 = struct.Struct("<I")
_F64 = struct.Struct("<d")


def _pack_matrix(magic, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {x.shape}")
    rows, cols = x.shape
    return _HEADER.pack(magic, VERSION, rows, cols) + x.astype("<f8").tobytes(order="F")


def _unpack_matrix(buf, magic):
    if len(buf) < _HEADER.size:
        raise FormatError("file too short for a container header")
    got, version, rows, cols = _HEADER.unpack_from(buf)
    if got != magic:
        raise FormatError(f"bad magic {got!r}, expected {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    end = _HEADER.size + 8 * rows * cols
    if len(buf) < end:
        raise FormatError(f"truncated data: need {end} bytes, have {len(buf)}")
    x = np.frombuffer(buf, dtype="<f8", count=rows * cols, offset=_HEADER.size)
    return x.reshape((rows, cols), order="F").astype(np.float64), end


def write_features(path, x):
    with open(path, "wb") as fh:
        fh.write(_pack_matrix(FEATURE_MAGIC, x))


def read_features(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    x, end = _unpack_matrix(buf, FEATURE_MAGIC)
    if end != len(buf):
        raise FormatError(f"{len(buf) - end} trailing bytes after feature matrix")
    return x


def write_weights(path, weights: ClassifierWeights):
    names = [str(c) for c in weights.class_names]
    if len(names) != weights.w.shape[0]:
        raise ValueError("one class name per weight row is required")
    parts = [_pack_matrix(WEIGHT_MAGIC, weights.w), _F64.pack(weights.eta),
             _U32.pack(len(names))]
    for name in names:
        raw = name.encode("utf-8")
        parts += [_U32.pack(len(raw)), raw]
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_weights(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    w, pos = _unpack_matrix(buf, WEIGHT_MAGIC)
    try:
        (eta,) = _F64.unpack_from(buf, pos)
        pos += _F64.size
        (count,) = _U32.unpack_from(buf, pos)
        pos += _U32.size
        names = []
        for _ in range(count):
            (length,) = _U32.unpack_from(buf, pos)
            pos += _U32.size
            raw = buf[pos:pos + length]
            if len(raw) != length:
                raise FormatError("truncated class-name table")
            names.append(raw.decode("utf-8"))
            pos += length
    except struct.error as exc:
        raise FormatError("truncated weight trailer") from exc
    if count != w.shape[0]:
        raise FormatError(f"{count} class names for {w.shape[0]} weight rows")
    return ClassifierWeights(w, eta, tuple(names))


def read_header(path):
    """Return ``(magic, version, rows, cols)`` without loading the data."""
    with open(path, "rb") as fh:
        buf = fh.read(_HEADER.size)
    if len(buf) < _HEADER.size:
        raise FormatError("file too short for a container header")
    return _HEADER.unpack(buf)


def write_features_csv(path, x, column_labels=None):
    """One line per feature dimension, one column per sample.

    Values use ``repr`` so that :func:`read_features_csv` round-trips exactly.
    """
    x = np.asarray(x, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if column_labels is not None:
            writer.writerow([str(c) for c in column_labels])
        for row in x:
            writer.writerow([repr(float(v)) for v in row])


def read_features_csv(path, header=False):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    labels = rows.pop(0) if header else None
    x = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    return (x, labels) if header else x
