"""CSV/JSON export of homogeneous result rows."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np


def _plain(v):
    """Python scalar from numpy scalars/bools so both writers see the same value."""
    if isinstance(v, np.generic):
        return v.item()
    return v


def _cell(v) -> str:
    v = _plain(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        # repr is the shortest string that round-trips
        return repr(v) if math.isfinite(v) else str(v)
    return "" if v is None else str(v)


def check_rows(rows, fields=None):
    rows = list(rows)
    if fields is None:
        fields = list(rows[0]) if rows else []
    for i, row in enumerate(rows):
        if list(row) != list(fields):
            raise ValueError(f"row {i} has fields {list(row)}, expected {list(fields)}")
    return rows, list(fields)


def to_csv(rows, fields=None) -> str:
    rows, fields = check_rows(rows, fields)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(fields)
    for row in rows:
        w.writerow([_cell(row[k]) for k in fields])
    return buf.getvalue()


def to_json(rows, fields=None) -> str:
    rows, fields = check_rows(rows, fields)
    return json.dumps([{k: _plain(r[k]) for k in fields} for r in rows], indent=1) + "\n"


def export(rows, fmt: str, path, fields=None) -> Path:
    """Write ``rows`` (a list of dicts with identical keys) as CSV or JSON.

    ``fields`` fixes the header when ``rows`` may be empty.
    """
    if fmt == "csv":
        text = to_csv(rows, fields)
    elif fmt == "json":
        text = to_json(rows, fields)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path
