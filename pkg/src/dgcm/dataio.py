"""CSV ingestion of price/return series and report serialization.

Input files are RFC-4180 CSV with a header row, one ISO-8601 date column and
one numeric column per series.  Blank cells (and ``NA``/``NaN``/``null``)
mark missing observations such as exchange holidays.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import AllMissingSeries, DataError, DomainError, NonPositivePrice, ParseError
from .panel import TimeSeriesPanel

MISSING = frozenset({"", "na", "nan", "null", "none", "#n/a"})


@dataclass(frozen=True)
class ReturnsTable:
    """Aligned, gap-filled return series."""

    dates: tuple[_dt.date, ...]
    names: tuple[str, ...]
    values: np.ndarray  # (n, len(names))
    filled: dict = field(default_factory=dict)  # name -> count of interpolated entries

    @property
    def n(self) -> int:
        return len(self.dates)

    def series(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.names.index(name)]
        except ValueError:
            raise DataError(f"unknown series {name!r}; available: {', '.join(self.names)}") from None

    def panel(self, schema: Mapping[str, Sequence[str]]) -> TimeSeriesPanel:
        """Bind series to roles, e.g. ``{"X": ["FTSE"], "Y": ["SPX"], "Z": ["HSI"]}``."""
        roles = {}
        for role, names in schema.items():
            if role not in ("X", "Y", "Z"):
                raise DataError(f"unknown role {role!r}")
            if isinstance(names, str):
                names = [names]
            roles[role] = {name: self.series(name) for name in names}
        return TimeSeriesPanel.from_arrays(**roles)


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.reader(fh, strict=True))
    except csv.Error as exc:
        raise ParseError(f"malformed CSV: {exc}") from exc


def _parse_cell(text: str, row: int, column: str) -> float:
    if text.strip().lower() in MISSING:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", row, column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", row, column)
    return value


def interpolate_gaps(x: np.ndarray) -> np.ndarray:
    """Linearly fill interior NaNs from the neighbouring observed values."""
    x = np.array(x, dtype=float)
    ok = ~np.isnan(x)
    if ok.sum() == 0:
        return x
    idx = np.arange(len(x))
    first, last = idx[ok][0], idx[ok][-1]
    inner = ~ok & (idx > first) & (idx < last)
    x[inner] = np.interp(idx[inner], idx[ok], x[ok])
    return x


def log_returns(prices: np.ndarray) -> np.ndarray:
    """Log return of each day against the last available earlier price.

    Entry ``t`` is NaN when the price on day ``t`` is missing or no earlier
    price exists; the result has one fewer entry than ``prices``.
    """
    prices = np.asarray(prices, dtype=float)
    out = np.full(len(prices) - 1, math.nan)
    last = math.nan
    for t, p in enumerate(prices):
        if t > 0 and not math.isnan(p) and not math.isnan(last):
            out[t - 1] = math.log(p / last)
        if not math.isnan(p):
            last = p
    return out


def load_returns(path, series: Sequence[str] | None = None, values: str = "prices",
                 date_column: str | None = None) -> ReturnsTable:
    """Read a CSV of prices (or returns) into aligned, gap-filled returns.

    Parameters
    ----------
    series : sequence of str, optional
        Columns to keep; defaults to every non-date column.
    values : {"prices", "returns"}
        ``"prices"`` converts to log returns, ``"returns"`` takes the
        columns as returns already.
    date_column : str, optional
        Defaults to a column named ``date`` (any case) or the first column.

    Notes
    -----
    Dates on which every kept series is missing are dropped.  Remaining
    missing returns are filled by linear interpolation of the neighbouring
    returns; leading and trailing dates where any series lacks a return
    are trimmed.
    """
    if values not in ("prices", "returns"):
        raise DataError(f"values must be 'prices' or 'returns', got {values!r}")
    rows = _read_rows(path)
    if not rows:
        raise ParseError("empty file", 1)
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names", 1)
    if date_column is None:
        lowered = [h.lower() for h in header]
        date_column = header[lowered.index("date")] if "date" in lowered else header[0]
    if date_column not in header:
        raise ParseError(f"no date column {date_column!r}", 1)
    dcol = header.index(date_column)
    names = [h for i, h in enumerate(header) if i != dcol] if series is None else list(series)
    for name in names:
        if name not in header or name == date_column:
            raise ParseError(f"no series column {name!r}", 1, name)
    if not names:
        raise DataError("no series columns")
    cols = [header.index(name) for name in names]

    dates, data = [], []
    for r, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", r)
        try:
            date = _dt.date.fromisoformat(row[dcol].strip())
        except ValueError:
            raise ParseError(f"bad ISO date {row[dcol]!r}", r, date_column) from None
        if dates and date <= dates[-1][0]:
            raise ParseError("dates must be strictly increasing", r, date_column)
        vals = [_parse_cell(row[c], r, name) for c, name in zip(cols, names)]
        if values == "prices":
            for v, name in zip(vals, names):
                if v <= 0:
                    raise NonPositivePrice(f"price {v!r} is not positive", r, name)
        dates.append((date, r))
        data.append(vals)

    arr = np.array(data, dtype=float).reshape(len(data), len(names))
    keep = ~np.all(np.isnan(arr), axis=1)
    arr = arr[keep]
    day = [d for (d, _), k in zip(dates, keep) if k]
    for j, name in enumerate(names):
        if np.all(np.isnan(arr[:, j])):
            raise AllMissingSeries(f"series {name!r} has no observations")

    if values == "prices":
        rets = np.column_stack([log_returns(arr[:, j]) for j in range(len(names))]) if len(arr) > 1 \
            else np.empty((0, len(names)))
        day = day[1:]
    else:
        rets = arr
    for j, name in enumerate(names):
        if np.all(np.isnan(rets[:, j])):
            raise AllMissingSeries(f"series {name!r} has no returns")
    filled = {}
    for j, name in enumerate(names):
        before = np.isnan(rets[:, j])
        rets[:, j] = interpolate_gaps(rets[:, j])
        filled[name] = int(np.count_nonzero(before & ~np.isnan(rets[:, j])))
    complete = ~np.any(np.isnan(rets), axis=1)
    if not complete.any():
        raise AllMissingSeries("no date has a return for every series")
    lo = int(np.argmax(complete))
    hi = len(complete) - int(np.argmax(complete[::-1]))
    return ReturnsTable(tuple(day[lo:hi]), tuple(names), rets[lo:hi].copy(), filled)


def ingest_csv(path, schema: Mapping[str, Sequence[str]], values: str = "prices",
               date_column: str | None = None) -> TimeSeriesPanel:
    """Load returns for the series named in ``schema`` and bind them to roles."""
    wanted = []
    for names in schema.values():
        for name in [names] if isinstance(names, str) else names:
            if name not in wanted:
                wanted.append(name)
    return load_returns(path, wanted, values, date_column).panel(schema)


def write_returns(table: ReturnsTable, path) -> None:
    """Write returns as CSV (``date`` plus one column per series, ``repr`` floats)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *table.names])
        for d, row in zip(table.dates, table.values):
            w.writerow([d.isoformat(), *(repr(float(v)) for v in row)])


def bh_adjust(pvalues) -> np.ndarray:
    """Benjamini-Hochberg adjusted p-values, in the input order."""
    p = np.asarray(pvalues, dtype=float).ravel()
    if p.size == 0:
        return p.copy()
    if np.any(~(p > 0)) or np.any(~(p <= 1)):
        raise DomainError("p-values must lie in (0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = np.minimum(1.0, p[order] * m / np.arange(1, m + 1))
    adj_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = adj_sorted
    return out


# ---------------------------------------------------------------- reports

CSV_COLUMNS = ("hypothesis", "kind", "statistic", "quantile", "p_raw", "p_bh", "reject", "seed", "error")


@dataclass(frozen=True)
class PvalueRow:
    hypothesis: str
    kind: str
    statistic: float | None
    quantile: float | None
    p_raw: float | None
    p_bh: float | None
    reject: bool | None
    seed: int
    error: str = ""


@dataclass(frozen=True)
class PvalueTable:
    """Per-hypothesis results with Benjamini-Hochberg adjusted p-values.

    Rows whose test failed carry an ``error`` and no numbers; they take no
    part in the adjustment.
    """

    rows: tuple[PvalueRow, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for r in self.rows:
            if r.error:
                continue
            if not (0 < r.p_bh <= 1) or r.p_bh < r.p_raw:
                raise DataError(f"row {r.hypothesis!r}: adjusted p-value {r.p_bh} inconsistent with {r.p_raw}")

    def __len__(self):
        return len(self.rows)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _num(text: str):
    return None if text == "" else float(text)


def _flag(text: str):
    return None if text == "" else text == "true"


def table_csv(table: PvalueTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in table.rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def table_json(table: PvalueTable) -> str:
    doc = {
        "metadata": table.metadata,
        "rows": [{c: getattr(r, c) for c in CSV_COLUMNS} for r in table.rows],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit_report(table: PvalueTable, path, fmt: str | None = None) -> None:
    """Write ``table`` as CSV or JSON (format taken from the suffix by default)."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    if fmt == "csv":
        text = table_csv(table)
    elif fmt == "json":
        text = table_json(table)
    else:
        raise DataError(f"unknown report format {fmt!r}")
    path.write_text(text, encoding="utf-8")


def read_report(path, fmt: str | None = None) -> PvalueTable:
    """Inverse of :func:`emit_report`."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    text = path.read_text(encoding="utf-8")
    if fmt == "json":
        doc = json.loads(text)
        rows = tuple(PvalueRow(**{c: r.get(c) for c in CSV_COLUMNS}) for r in doc["rows"])
        return PvalueTable(rows, doc.get("metadata", {}))
    if fmt != "csv":
        raise DataError(f"unknown report format {fmt!r}")
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ParseError(f"unexpected report header {reader.fieldnames}", 1)
    rows = []
    for rec in reader:
        rows.append(PvalueRow(rec["hypothesis"], rec["kind"], _num(rec["statistic"]), _num(rec["quantile"]),
                              _num(rec["p_raw"]), _num(rec["p_bh"]), _flag(rec["reject"]),
                              int(rec["seed"]), rec["error"]))
    return PvalueTable(tuple(rows))


RATE_COLUMNS = ("family", "complexity", "strength", "n", "oracle", "replications",
                "rejections", "failures", "rate", "se")


def emit_rates(rows: Sequence[Mapping], path, fmt: str | None = None, metadata: Mapping | None = None) -> None:
    """Long-format rejection-rate table, one line per ``(parameter, n)`` cell."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(RATE_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in RATE_COLUMNS])
        path.write_text(buf.getvalue(), encoding="utf-8")
    elif fmt == "json":
        clean = [{c: (None if isinstance(row[c], float) and math.isnan(row[c]) else row[c])
                  for c in RATE_COLUMNS} for row in rows]
        doc = {"metadata": dict(metadata or {}), "rows": clean}
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    else:
        raise DataError(f"unknown report format {fmt!r}")
