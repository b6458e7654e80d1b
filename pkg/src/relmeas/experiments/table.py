"""Result tables and their CSV form.

The file starts with ``#``-prefixed metadata lines followed by an RFC-4180
body. Floats are written as ``%.16e``: identical inputs give identical bytes and
re-parsing recovers every value exactly.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

UNITS_NOTE = "natural units; lengths in Compton lengths of unit mass, momenta in inverse lengths"


@dataclass
class ResultTable:
    """Tabular experiment output.

    Parameters
    ----------
    columns : list of str
    rows : list of tuple
        Each row has one entry per column (numbers).
    metadata : dict
        Free-form header entries; excluded from determinism comparisons.
    summary : dict
        Derived scalars (fits, flags); written as header lines too.
    companions : dict
        Extra tables written next to the main file as ``<stem>_<name>.csv``.
    """

    columns: list
    rows: list = field(default_factory=list)
    units: str = UNITS_NOTE
    metadata: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    companions: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = list(self.columns)
        for r in self.rows:
            self._check(r)

    def _check(self, row):
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} entries, expected {len(self.columns)}")

    def append(self, row):
        self._check(row)
        self.rows.append(tuple(row))

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float) or hasattr(v, "dtype"):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.16e}"  # 17 significant digits round-trip exactly
    return str(v)


def _parse_value(s: str):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def render_body(table: ResultTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([format_value(v) for v in r])
    return buf.getvalue()


def render_table(table: ResultTable) -> str:
    head = [f"# units: {table.units}"]
    for k, v in table.metadata.items():
        vals = v if isinstance(v, (list, tuple)) else [v]
        head += [f"# meta.{k}: {format_value(x)}" for x in vals]
    for k, v in table.summary.items():
        head.append(f"# summary.{k}: {format_value(v)}")
    return "".join(h.replace("\n", " ") + "\r\n" for h in head) + render_body(table)


def companion_path(path, name) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_{name}{path.suffix or '.csv'}")


def emit_table(table: ResultTable, path) -> list[Path]:
    """Write ``table`` (and its companions) to disk; returns the paths written."""
    path = Path(path)
    out = [(path, table)] + [(companion_path(path, n), t) for n, t in table.companions.items()]
    written = []
    for p, t in out:
        try:
            with open(p, "w", newline="") as fh:
                fh.write(render_table(t))
        except OSError as exc:
            raise OSError(f"cannot write result table to {p}: {exc}") from exc
        written.append(p)
    return written


def read_table(path) -> ResultTable:
    """Parse a file written by :func:`emit_table` (companions are not followed)."""
    with open(path, newline="") as fh:
        text = fh.read()
    header, body = [], []
    for line in text.splitlines():
        (header if line.startswith("#") and not body else body).append(line)
    units, meta, summary = UNITS_NOTE, {}, {}
    for h in header:
        key, _, val = h[1:].strip().partition(": ")
        if key == "units":
            units = val
        elif key.startswith("meta."):
            meta.setdefault(key[5:], []).append(_parse_value(val))
        elif key.startswith("summary."):
            summary[key[8:]] = _parse_value(val)
    meta = {k: v[0] if len(v) == 1 else v for k, v in meta.items()}
    reader = csv.reader(body)
    cols = next(reader)
    rows = [tuple(_parse_value(x) for x in r) for r in reader if r]
    return ResultTable(cols, rows, units, meta, summary)
