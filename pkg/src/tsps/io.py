"""Versioned JSON files, OBJ export and CSV tables."""

from __future__ import annotations

import csv
import datetime as _dt
import json
import math
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import FormatError

FORMAT_VERSION = 1
KINDS = ("cauchy", "mesh", "forms", "ts_surface", "time_scale", "grid_function")


def _clean(x):
    """JSON-safe copy: numpy scalars and arrays to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def make_metadata(config: dict, seed: Optional[int] = None, timestamp: bool = True) -> dict:
    meta = {"config": _clean(config)}
    if seed is not None:
        meta["seed"] = int(seed)
        meta["rng"] = "numpy PCG64"
    if timestamp:
        meta["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return meta


def dumps(kind: str, payload: dict, metadata: Optional[dict] = None) -> str:
    """Serialize a payload with its envelope.

    Floats are written by ``repr`` (shortest string that round-trips the
    double), so values survive a write/read cycle bit for bit.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown file kind {kind!r}")
    doc = {"format_version": FORMAT_VERSION, "kind": kind, "metadata": metadata or {}}
    doc.update(_clean(payload))
    return json.dumps(doc, sort_keys=False, allow_nan=False)


def write_json(path, kind: str, payload: dict, metadata: Optional[dict] = None) -> None:
    text = dumps(kind, payload, metadata)
    Path(path).write_text(text + "\n")


def loads(text: str, expected: Optional[Iterable[str]] = None) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("top-level JSON value must be an object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {doc.get('format_version')!r}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise FormatError(f"unknown kind {kind!r}")
    if expected is not None and kind not in tuple(expected):
        raise FormatError(f"expected a {' or '.join(expected)} file, got {kind!r}")
    return doc


def read_json(path, expected: Optional[Iterable[str]] = None) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return loads(text, expected)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
            n += 1
    return n


def write_obj(path, vertices: np.ndarray) -> None:
    """Quad mesh as Wavefront OBJ: row-major vertices, 1-based quad faces."""
    R, C = vertices.shape[:2]
    lines = []
    for m in range(R):
        for n in range(C):
            x, y, z = vertices[m, n]
            lines.append(f"v {fmt(x)} {fmt(y)} {fmt(z)}")
    for m in range(R - 1):
        for n in range(C - 1):
            i = m * C + n + 1
            lines.append(f"f {i} {i + C} {i + C + 1} {i + 1}")
    Path(path).write_text("\n".join(lines) + "\n")
