"""Sample files: UTF-8 text with one real per line, or raw little-endian float64."""
from __future__ import annotations

import math
import os
import tempfile
from pathlib import Path

import numpy as np

BINARY_SUFFIXES = (".f64", ".bin")


class SampleFileError(ValueError):
    pass


def read_samples(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() in BINARY_SUFFIXES:
        raw = path.read_bytes()
        if len(raw) % 8:
            raise SampleFileError(f"{path}: size {len(raw)} is not a multiple of 8 bytes")
        values = np.frombuffer(raw, dtype="<f8").astype(float)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise SampleFileError(f"{path}: value #{bad[0] + 1} is not finite")
        return values
    values = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            try:
                value = float(text)
            except ValueError:
                raise SampleFileError(f"{path}:{lineno}: cannot parse {text!r} as a number") from None
            if not math.isfinite(value):
                raise SampleFileError(f"{path}:{lineno}: value {text!r} is not finite")
            values.append(value)
    return np.array(values, dtype=float)


def write_samples(path, values) -> None:
    path = Path(path)
    values = np.asarray(values, dtype=float)
    if path.suffix.lower() in BINARY_SUFFIXES:
        atomic_write(path, values.astype("<f8").tobytes())
    else:
        atomic_write(path, "".join(f"{v!r}\n" for v in values.tolist()).encode())


def atomic_write(path, data: bytes) -> None:
    """Write via a temporary file so a failure never leaves partial output."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
