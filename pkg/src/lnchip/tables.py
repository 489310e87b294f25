"""CSV / JSON table output with byte-stable float formatting."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = 1

SCAN_COLUMNS = ("x_value", "coinc_r1r4", "coinc_r1r1", "coinc_r4r4", "singles_r1", "singles_r4", "accidentals")
MORPH_COLUMNS = ("U_volts", "p_separated", "p_bunched_r1", "p_bunched_r4")
CHANNEL_COLUMNS = ("channel", "period_um", "shg_wavelength_nm")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _plain(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return int(v)
    return float(v)


def render_csv(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_json_table(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "columns": list(columns),
        "rows": [{c: _plain(v) for c, v in zip(columns, row)} for row in rows],
    }
    return dumps(doc)


def render(columns, rows, fmt: str) -> str:
    rows = list(rows)
    if fmt == "csv":
        return render_csv(columns, rows)
    if fmt == "json":
        return render_json_table(columns, rows)
    raise ValueError(f"unknown format {fmt!r}")


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def read_table(path: str | Path) -> dict[str, np.ndarray]:
    """Load a CSV or JSON table written by :func:`render` into column arrays."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return {c: np.array([row[c] for row in doc["rows"]], dtype=float) for c in doc["columns"]}
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    data = [[float(v) for v in row] for row in reader if row]
    arr = np.array(data, dtype=float).reshape(-1, len(header))
    return {c: arr[:, i] for i, c in enumerate(header)}
