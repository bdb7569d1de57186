"""Deterministic JSON and CSV writers.

Floats are written with 17 significant digits so reports round-trip exactly;
NaN and infinities become null.  Files are written to a temporary sibling and
renamed into place.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def plain(obj):
    """Recursively convert dataclasses, numpy values and tuples into JSON-ready Python objects."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def _float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def dumps(obj, indent: int = 2) -> str:
    """JSON text with fixed float formatting and insertion-ordered keys."""
    obj = plain(obj)
    out = []

    def emit(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if o is None:
            out.append("null")
        elif isinstance(o, bool):
            out.append("true" if o else "false")
        elif isinstance(o, int):
            out.append(str(o))
        elif isinstance(o, float):
            out.append(_float(o))
        elif isinstance(o, str):
            out.append(json.dumps(o))
        elif isinstance(o, list):
            if not o:
                out.append("[]")
                return
            out.append("[\n")
            for i, v in enumerate(o):
                out.append(pad)
                emit(v, level + 1)
                out.append(",\n" if i < len(o) - 1 else "\n")
            out.append(end + "]")
        elif isinstance(o, dict):
            if not o:
                out.append("{}")
                return
            out.append("{\n")
            items = list(o.items())
            for i, (k, v) in enumerate(items):
                out.append(pad + json.dumps(k) + ": ")
                emit(v, level + 1)
                out.append(",\n" if i < len(items) - 1 else "\n")
            out.append(end + "}")
        else:
            raise TypeError(f"cannot serialize {type(o).__name__}")

    emit(obj, 0)
    return "".join(out) + "\n"


def write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    write_text(path, dumps(obj))


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            v = plain(v)
            cells.append(_float(v) if isinstance(v, float) else ("" if v is None else str(v)))
        lines.append(",".join(c if c != "null" else "" for c in cells))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows) -> None:
    write_text(path, csv_text(header, rows))
