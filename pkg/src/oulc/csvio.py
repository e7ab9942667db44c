"""Reading and writing daily open/high/low/close CSV files."""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import MIN_SERIES_LENGTH, Series
from .errors import InvariantViolation, ParseError, SeriesTooShort

COLUMNS = ("date", "open", "high", "low", "close")


@dataclass(frozen=True)
class OhlcRecord:
    date: dt.date
    open: float
    high: float
    low: float
    close: float


def _float(text, name, line):
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise ParseError(f"{name} is not a number: {text!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"{name} is not finite: {text!r}", line)
    return v


def read_records(path, log_transform: bool = True) -> list[OhlcRecord]:
    """Parse and validate every row. Extra columns (adjusted close, volume) are ignored."""
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        names = [h.strip().lower() for h in header]
        missing = [c for c in COLUMNS if c not in names]
        if missing:
            raise ParseError(f"header lacks column(s) {', '.join(missing)}", 1)
        idx = [names.index(c) for c in COLUMNS]
        records = []
        prev = None
        for row in reader:
            line = reader.line_num
            if not row or all(not x.strip() for x in row):
                continue
            if len(row) < len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
            raw = [row[i].strip() for i in idx]
            try:
                date = dt.date.fromisoformat(raw[0])
            except ValueError:
                raise ParseError(f"bad ISO date {raw[0]!r}", line) from None
            o, h, lo, c = (_float(v, n, line) for v, n in zip(raw[1:], COLUMNS[1:]))
            if log_transform and not min(o, h, lo, c) > 0:
                raise InvariantViolation("prices must be positive", line)
            if not (lo <= min(o, c) and max(o, c) <= h):
                raise InvariantViolation(
                    f"need low <= min(open, close) <= max(open, close) <= high, got "
                    f"open={o} high={h} low={lo} close={c}", line)
            if not h > lo:
                raise InvariantViolation("high equals low", line)
            if prev is not None and not date > prev:
                raise InvariantViolation(f"date {date} does not follow {prev}", line)
            prev = date
            records.append(OhlcRecord(date, o, h, lo, c))
    return records


def load(path, log_transform: bool = True) -> tuple[Series, list[dt.date]]:
    """Series and the matching list of dates."""
    recs = read_records(path, log_transform)
    if len(recs) < MIN_SERIES_LENGTH:
        raise SeriesTooShort(f"{path}: {len(recs)} rows, need at least {MIN_SERIES_LENGTH}")
    cols = np.array([(r.open, r.high, r.low, r.close) for r in recs], dtype=np.float64)
    if log_transform:
        cols = np.log(cols)
    return Series(cols[:, 0], cols[:, 1], cols[:, 2], cols[:, 3]), [r.date for r in recs]


def ingest(path, log_transform: bool = True) -> Series:
    return load(path, log_transform)[0]


def business_days(n: int, start: dt.date = dt.date(2000, 1, 3)) -> list[dt.date]:
    days = np.busday_offset(np.datetime64(start, "D"), np.arange(n), roll="forward")
    return [d.astype(dt.date) for d in days]


def write_series(series: Series, path, dates=None, exponentiate: bool = False) -> None:
    """Write ``series`` in the ingest schema to a path or open text file.

    With ``exponentiate`` off the values are written as-is in shortest
    round-trip form, so ingesting with ``log_transform=False`` recovers them
    bitwise.
    """
    if dates is None:
        dates = business_days(len(series))
    arr = series.as_array()
    if exponentiate:
        arr = np.exp(arr)
    if hasattr(path, "write"):
        _write_rows(path, dates, arr)
        return
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        _write_rows(fh, dates, arr)


def _write_rows(fh, dates, arr):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    for d, (o, u, l, c) in zip(dates, arr):  # noqa: E741
        w.writerow((d.isoformat(), repr(float(o)), repr(float(u)), repr(float(l)), repr(float(c))))
