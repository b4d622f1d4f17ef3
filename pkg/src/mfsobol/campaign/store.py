"""CSV/JSON persistence with deterministic number formatting."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        # repr round-trips exactly
        return repr(float(value))
    return str(value)


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_csv(path, header, rows) -> None:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())


def read_csv(path) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def merge_csv(path, header, rows, key) -> None:
    """Replace rows of ``path`` whose ``key`` columns match new rows; keep the rest."""
    path = Path(path)
    idx = [header.index(k) for k in key]
    merged = {}
    if path.is_file():
        old_header, old = read_csv(path)
        if old_header == list(header):
            for r in old:
                vals = [r[h] for h in header]
                merged[tuple(vals[i] for i in idx)] = vals
    for r in rows:
        vals = [fmt(v) for v in r]
        merged[tuple(vals[i] for i in idx)] = vals
    write_csv(path, header, list(merged.values()))


def write_json(path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=fmt) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
