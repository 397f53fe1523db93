"""Binary PGM images, the F64F float-field container, and CSV run reports.

F64F layout: the ASCII line ``F64F <width> <height>\\n`` followed by
``width*height`` little-endian float64 values in row-major order.  A vector
field is written as its two planes back to back (payload ``16*width*height``
bytes) under the same header.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .common import TRACE_COLUMNS, RunReport, TraceRow


class FormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# PGM
# ---------------------------------------------------------------------------


def _pgm_tokens(data: bytes, count: int):
    """Parse ``count`` whitespace-separated header tokens (comments allowed)."""
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    if pos >= n or not data[pos:pos + 1].isspace():
        raise FormatError("malformed PGM header")
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) PGM with maxval 255 or 65535; intensities map to [0, 1]."""
    data = Path(path).read_bytes()
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise FormatError(f"not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError("malformed PGM header") from exc
    if width < 1 or height < 1:
        raise FormatError(f"bad PGM size {width}x{height}")
    if maxval == 255:
        dtype = np.dtype("u1")
    elif maxval == 65535:
        dtype = np.dtype(">u2")
    else:
        raise FormatError(f"unsupported PGM maxval {maxval}")
    nbytes = width * height * dtype.itemsize
    raster = data[offset:offset + nbytes]
    if len(raster) < nbytes:
        raise FormatError(f"truncated PGM payload: {len(raster)} of {nbytes} bytes")
    pixels = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return pixels.astype(np.float64) / maxval


def quantize(field, maxval: int = 255) -> np.ndarray:
    """Clamp to [0, 1] and round half up to integer levels."""
    f = np.clip(np.asarray(field, dtype=np.float64), 0.0, 1.0)
    return np.floor(f * maxval + 0.5).astype(np.int64)


def write_pgm(field, path, maxval: int = 255) -> None:
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise ValueError("PGM needs a 2-D field")
    if maxval not in (255, 65535):
        raise FormatError(f"unsupported PGM maxval {maxval}")
    height, width = field.shape
    levels = quantize(field, maxval).astype("u1" if maxval == 255 else ">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        fh.write(levels.tobytes())


def write_preview(field, path) -> tuple[float, float]:
    """Min-max normalized PGM preview plus a ``<path>.range.txt`` sidecar with the range."""
    field = np.asarray(field, dtype=np.float64)
    lo, hi = float(field.min()), float(field.max())
    scaled = (field - lo) / (hi - lo) if hi > lo else np.zeros_like(field)
    write_pgm(scaled, path)
    Path(str(path) + ".range.txt").write_text(f"min {lo!r}\nmax {hi!r}\n")
    return lo, hi


# ---------------------------------------------------------------------------
# F64F
# ---------------------------------------------------------------------------

F64F_MAGIC = "F64F"


def field_header(width: int, height: int) -> bytes:
    return f"{F64F_MAGIC} {width} {height}\n".encode("ascii")


def write_field(field, path) -> None:
    """Write a scalar ``(H, W)`` or vector ``(2, H, W)`` field."""
    a = np.asarray(field, dtype=np.float64)
    if a.ndim == 2:
        height, width = a.shape
    elif a.ndim == 3 and a.shape[0] == 2:
        height, width = a.shape[1:]
    else:
        raise ValueError(f"cannot store array of shape {a.shape} as F64F")
    with open(path, "wb") as fh:
        fh.write(field_header(width, height))
        fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_field(path) -> np.ndarray:
    """Read an F64F file; the payload size decides scalar vs. vector."""
    data = Path(path).read_bytes()
    nl = data.find(b"\n", 0, 64)
    if nl < 0:
        raise FormatError("missing F64F header line")
    parts = data[:nl].split(b" ")
    if len(parts) != 3 or parts[0] != F64F_MAGIC.encode():
        raise FormatError(f"bad F64F magic/header {data[:nl]!r}")
    try:
        width, height = int(parts[1]), int(parts[2])
    except ValueError as exc:
        raise FormatError(f"bad F64F header {data[:nl]!r}") from exc
    if width < 1 or height < 1:
        raise FormatError(f"bad F64F size {width}x{height}")
    payload = data[nl + 1:]
    plane = 8 * width * height
    if len(payload) == plane:
        shape = (height, width)
    elif len(payload) == 2 * plane:
        shape = (2, height, width)
    else:
        raise FormatError(f"F64F payload is {len(payload)} bytes, expected {plane} or {2 * plane}")
    return np.frombuffer(payload, dtype="<f8").reshape(shape).astype(np.float64)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.9g}"


def write_report(report: RunReport, path, timing: bool = True) -> None:
    """One CSV row per outer iteration, then a ``#final`` summary row.

    With ``timing=False`` the ``wall_ms`` column is left empty so that repeat
    runs produce identical bytes.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in report.rows:
            w.writerow(_row_cells(row, timing))
        if report.final is not None:
            cells = _row_cells(report.final, timing)
            cells[0] = "#final"
            w.writerow(cells)


def _row_cells(row: TraceRow, timing: bool):
    cells = [_fmt(getattr(row, c)) for c in TRACE_COLUMNS]
    if not timing:
        cells[TRACE_COLUMNS.index("wall_ms")] = ""
    return cells


def read_report(path) -> tuple[list[dict], dict | None]:
    """Parse a report CSV back into ``(rows, final)`` dicts of floats (None for blanks)."""
    rows, final = [], None
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            parsed = {k: (None if v == "" else float(v)) for k, v in rec.items() if k != "iter"}
            if rec["iter"] == "#final":
                final = parsed
            else:
                parsed["iter"] = int(rec["iter"])
                rows.append(parsed)
    return rows, final
