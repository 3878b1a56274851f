"""File formats: headerless ``index,value`` CSV for 1D signals, PGM for
images, plus small CSV/SVG writers used by the command-line tools.

All writers go through :func:`atomic_write` (temporary file, then rename).
"""

from __future__ import annotations

import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .graph import WeightedGraph
from .signal import Signal


class FormatError(ValueError):
    """A file could not be parsed; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


def atomic_write(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    return repr(float(v))


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return _fmt(v)


def write_csv_columns(path, header, columns):
    """CSV with a header row; used for multi-column experiment output."""
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_cell(v) for v in row))
    atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def write_signal_csv(path, x: Signal):
    if x.ndim != 1:
        raise ValueError("CSV output holds 1D signals; use PGM for images")
    text = "".join(f"{i},{_fmt(v)}\n" for i, v in enumerate(x.values))
    atomic_write(path, text.encode("ascii"))


def read_signal_csv(path) -> Signal:
    data = Path(path).read_bytes()
    values = []
    offset = 0
    for lineno, raw in enumerate(data.split(b"\n")):
        line = raw.strip()
        if line:
            parts = line.split(b",")
            if len(parts) != 2:
                raise FormatError(f"{path}: line {lineno + 1} needs two columns", offset)
            try:
                idx, val = int(parts[0]), float(parts[1])
            except ValueError:
                raise FormatError(f"{path}: line {lineno + 1} is not 'index,value'",
                                  offset) from None
            if idx != len(values):
                raise FormatError(f"{path}: expected index {len(values)}, got {idx}", offset)
            values.append(val)
        offset += len(raw) + 1
    if not values:
        raise FormatError(f"{path}: no samples", 0)
    try:
        return Signal(np.array(values), (len(values),))
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}", 0) from None


def quantize(values, maxval: int = 255) -> np.ndarray:
    """Map [0, 1] to integers in [0, maxval], rounding half away from zero."""
    scaled = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0) * maxval
    return np.floor(scaled + 0.5).astype(np.int64)


def write_pgm(path, image: Signal):
    """Binary P5 PGM with maxval 255.  Values outside [0, 1] are clipped."""
    if image.ndim != 2:
        raise ValueError("PGM output needs a 2D signal")
    rows, cols = image.shape
    header = f"P5\n{cols} {rows}\n255\n".encode("ascii")
    atomic_write(path, header + quantize(image.values).astype(np.uint8).tobytes())


def write_pgm_ascii(path, image: Signal):
    rows, cols = image.shape
    q = quantize(image.values).reshape(rows, cols)
    body = "\n".join(" ".join(str(v) for v in row) for row in q)
    atomic_write(path, f"P2\n{cols} {rows}\n255\n{body}\n".encode("ascii"))


_TOKEN = re.compile(rb"\S+")


def _header_tokens(data: bytes, count: int):
    """Next ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        m = _TOKEN.match(data, pos)
        if m is None:
            raise FormatError("truncated PGM header", pos)
        tok = m.group()
        if b"#" in tok:
            tok = tok[:tok.index(b"#")]
            tokens.append((tok, pos))
            pos += len(tok)
            continue
        tokens.append((tok, pos))
        pos = m.end()
    return tokens, pos


def parse_pgm(data: bytes) -> Signal:
    if data[:2] not in (b"P2", b"P5"):
        raise FormatError(f"bad PGM magic number {data[:2]!r}", 0)
    binary = data[:2] == b"P5"
    tokens, pos = _header_tokens(data, 4)
    nums = []
    for tok, off in tokens[1:]:
        if not tok.isdigit():
            raise FormatError(f"bad PGM header field {tok!r}", off)
        nums.append(int(tok))
    cols, rows, maxval = nums
    if cols < 1 or rows < 1:
        raise FormatError(f"bad PGM dimensions {cols}x{rows}", tokens[1][1])
    if not 0 < maxval < 65536:
        raise FormatError(f"bad PGM maxval {maxval}", tokens[3][1])
    count = rows * cols
    if binary:
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise FormatError("missing whitespace after PGM header", pos)
        pos += 1
        width = 1 if maxval < 256 else 2
        need = count * width
        if len(data) - pos < need:
            raise FormatError(f"truncated PGM raster: need {need} bytes, "
                              f"have {len(data) - pos}", len(data))
        dtype = np.uint8 if width == 1 else np.dtype(">u2")
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos).astype(np.int64)
    else:
        vals = []
        for m in _TOKEN.finditer(data, pos):
            tok = m.group()
            if tok.startswith(b"#"):
                continue
            if not tok.isdigit():
                raise FormatError(f"bad PGM sample {tok!r}", m.start())
            vals.append(int(tok))
            if len(vals) == count:
                break
        if len(vals) < count:
            raise FormatError(f"truncated PGM raster: {len(vals)} of {count} samples",
                              len(data))
        raw = np.array(vals, dtype=np.int64)
    if raw.max(initial=0) > maxval:
        raise FormatError(f"sample exceeds maxval {maxval}", pos)
    return Signal(raw / maxval, (rows, cols))


def read_pgm(path) -> Signal:
    return parse_pgm(Path(path).read_bytes())


def read_signal(path) -> Signal:
    """Read a ``.pgm`` image or an ``index,value`` CSV signal."""
    if str(path).lower().endswith((".pgm", ".pnm")):
        return read_pgm(path)
    return read_signal_csv(path)


def write_signal(path, x: Signal):
    if x.ndim == 2:
        write_pgm(path, x)
    else:
        write_signal_csv(path, x)


def write_edges_csv(path, graph: WeightedGraph):
    """Debug dump ``i,j,w_ij`` with one line per undirected edge (``i <= j``)."""
    text = "".join(f"{i},{j},{_fmt(w)}\n"
                   for i, j, w in zip(graph.rows, graph.cols, graph.weights))
    atomic_write(path, text.encode("ascii"))


def svg_polylines(series: dict, width: int = 900, height: int = 360,
                  title: str = "") -> str:
    """Minimal SVG overlay of equally sampled curves, one polyline each."""
    colors = ["#888888", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    arrays = [np.asarray(v, dtype=np.float64) for v in series.values()]
    lo = min(a.min() for a in arrays)
    hi = max(a.max() for a in arrays)
    span = hi - lo if hi > lo else 1.0
    pad = 30
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{pad}" y="20" font-size="14">{title}</text>')
    for k, (name, a) in enumerate(zip(series, arrays)):
        xs = pad + np.arange(a.size) * (width - 2 * pad) / max(a.size - 1, 1)
        ys = height - pad - (a - lo) * (height - 2 * pad) / span
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        color = colors[k % len(colors)]
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1" '
                   f'points="{pts}"/>')
        out.append(f'<text x="{width - 160}" y="{20 + 16 * k}" font-size="12" '
                   f'fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
