"""Delimited tables with '#'-prefixed JSON metadata lines.

Floats are written with ``repr`` so that parsing reproduces them bit-exactly.
"""

from __future__ import annotations

import csv
import json
import math


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) or hasattr(v, "dtype"):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_table(fh, columns, rows, meta: dict | None = None) -> None:
    for key in sorted(meta or {}):
        fh.write(f"# {key}: {json.dumps(meta[key], sort_keys=True)}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def _parse(cell: str):
    if cell == "":
        return None
    try:
        return float(cell)
    except ValueError:
        return cell


def read_table(fh):
    """Return (meta, columns, rows); numeric cells become floats."""
    meta: dict = {}
    lines = []
    for line in fh:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(":")
            meta[key.strip()] = json.loads(val.strip())
        elif line.strip():
            lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    rows = [[_parse(c) for c in row] for row in reader]
    return meta, columns, rows
