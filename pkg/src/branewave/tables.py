"""Portable tables: one ``#``-prefixed JSON header line, a column line, then %.17g rows.

%.17g and JSON's float repr both round-trip float64 exactly, so a table
written and read back reproduces its arrays bit for bit.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def dump_meta(meta: dict) -> str:
    return json.dumps(_plain(meta), sort_keys=True, separators=(",", ":"))


def format_table(meta: dict, columns, rows) -> str:
    rows = np.atleast_2d(np.asarray(rows, float)) if len(rows) else np.zeros((0, len(columns)))
    if rows.shape[1] != len(columns):
        raise ValueError(f"{len(columns)} columns but rows have width {rows.shape[1]}")
    buf = io.StringIO()
    buf.write("# " + dump_meta(meta) + "\n")
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join("%.17g" % v for v in r) + "\n")
    return buf.getvalue()


def write_table(path, meta: dict, columns, rows) -> Path:
    path = Path(path)
    text = format_table(meta, columns, rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def read_table(path):
    """Returns (meta, columns, rows) with rows as a float array of shape (n, len(columns))."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing JSON header line")
        meta = json.loads(first[2:])
        columns = fh.readline().rstrip("\n").split(",")
        body = fh.read()
    rows = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2) if body.strip() else np.zeros((0, len(columns)))
    return meta, columns, rows
