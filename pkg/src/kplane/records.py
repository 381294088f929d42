"""CSV / JSON writers with a provenance header.

Every file starts with the measure convention and the resolved run
configuration; floats are written with 17 significant digits so doubles
round-trip exactly and identical runs give byte-identical files.
"""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .quadrature import CONVENTION_ID, CONVENTION_TEXT


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def header_lines(config):
    return [
        f"# convention_id: {CONVENTION_ID}",
        f"# convention: {CONVENTION_TEXT}",
        "# config: " + json.dumps(_jsonable(config or {}), sort_keys=True),
    ]


def csv_text(columns, rows, config=None):
    buf = io.StringIO()
    for line in header_lines(config):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows, config=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(columns, rows, config))
    return path


def read_csv(path):
    """Rows of a file written by :func:`write_csv` as dicts of strings (header comments skipped)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def json_text(obj, config=None):
    payload = {"convention_id": CONVENTION_ID, "config": config or {}}
    payload.update(obj)
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"


def write_json(path, obj, config=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json_text(obj, config))
    return path


IDENTITY_COLUMNS = ["identity", "params", "lhs", "rhs", "stderr_lhs", "stderr_rhs", "pass"]
