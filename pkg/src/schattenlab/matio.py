"""Matrix file formats used for experiment replay and the CLI.

Text format::

    # optional comments
    <rows> <cols>
    re,im re,im ...        (one line per row)

Binary format: the 4-byte magic ``SLM1``, two little-endian uint32 giving
rows and cols, then rows*cols little-endian float64 pairs (re, im) in
row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ParseError
from .spectral import as_matrix

MAGIC = b"SLM1"


def _fmt(x: float) -> str:
    return repr(float(x))


def dumps_text(M) -> str:
    M = as_matrix(M)
    rows, cols = M.shape
    lines = [f"{rows} {cols}"]
    for row in M:
        lines.append(" ".join(f"{_fmt(z.real)},{_fmt(z.imag)}" for z in row))
    return "\n".join(lines) + "\n"


def loads_text(text: str) -> np.ndarray:
    header = None
    rows_out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("expected header '<rows> <cols>'", lineno)
            try:
                header = (int(parts[0]), int(parts[1]))
            except ValueError:
                raise ParseError(f"bad dimension header {line!r}", lineno) from None
            if header[0] < 0 or header[1] < 0:
                raise ParseError("negative dimension", lineno)
            continue
        row = []
        for tok in line.split():
            try:
                re_s, im_s = tok.split(",")
                row.append(complex(float(re_s), float(im_s)))
            except ValueError:
                raise ParseError(f"bad entry {tok!r}, expected 're,im'", lineno) from None
        if len(row) != header[1]:
            raise ParseError(f"expected {header[1]} entries, got {len(row)}", lineno)
        rows_out.append(row)
        if len(rows_out) > header[0]:
            raise ParseError(f"more than {header[0]} rows", lineno)
    if header is None:
        raise ParseError("empty matrix file")
    if header[1] == 0 and not rows_out:
        # rows with no entries leave no lines behind
        return np.zeros(header, dtype=complex)
    if len(rows_out) != header[0]:
        raise ParseError(f"expected {header[0]} rows, got {len(rows_out)}")
    return np.array(rows_out, dtype=complex).reshape(header)


def dumps_binary(M) -> bytes:
    M = as_matrix(M)
    rows, cols = M.shape
    body = np.ascontiguousarray(M, dtype="<c16").tobytes()
    return MAGIC + struct.pack("<II", rows, cols) + body


def loads_binary(data: bytes) -> np.ndarray:
    if data[:4] != MAGIC:
        raise ParseError("not a binary matrix file (bad magic)")
    if len(data) < 12:
        raise ParseError("truncated header")
    rows, cols = struct.unpack("<II", data[4:12])
    expected = 12 + 16 * rows * cols
    if len(data) != expected:
        raise ParseError(f"expected {expected} bytes, got {len(data)}")
    return np.frombuffer(data[12:], dtype="<c16").reshape(rows, cols).astype(complex)


def save_matrix(path, M) -> None:
    path = Path(path)
    if path.suffix == ".bin":
        path.write_bytes(dumps_binary(M))
    else:
        path.write_text(dumps_text(M), encoding="utf-8")


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == MAGIC:
        return loads_binary(data)
    return loads_text(data.decode("utf-8"))
