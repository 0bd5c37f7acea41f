"""Reading and writing weekly count series as CSV.

The on-disk format is a two-column ``week,count`` table with a header
row.  The week column accepts either ISO week labels (``2015-W40``) or
the ISO date of that week's Monday (``2015-09-28``); the two spellings
may be mixed freely since both normalise to the same label.  Rows must
form consecutive calendar weeks and counts must be non-negative
integers.  Malformed input raises :class:`DataError` with enough
context (row number, offending value, missing weeks) to fix the file
by hand.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import os
from typing import List

import numpy as np

from .counts import CountSeries, next_week, week_from_date

__all__ = [
    "DataError",
    "parse_series",
    "format_series",
    "read_series_csv",
    "write_series_csv",
]


class DataError(ValueError):
    """Raised when an input file cannot be interpreted as a count series."""


def _normalise_week(token: str, row: int) -> str:
    token = token.strip()
    if not token:
        raise DataError(f"row {row}: empty week field")
    # ISO week spelling first, then a plain date
    try:
        year_s, week_s = token.split("-W")
        year, week = int(year_s), int(week_s)
        _dt.date.fromisocalendar(year, week, 1)
        return f"{year}-W{week:02d}"
    except (ValueError, TypeError):
        pass
    try:
        day = _dt.date.fromisoformat(token)
    except ValueError:
        raise DataError(
            f"row {row}: week {token!r} is neither an ISO week label "
            "(2015-W40) nor an ISO date"
        ) from None
    if day.isoweekday() != 1:
        raise DataError(
            f"row {row}: date {token} is not a Monday; weeks are keyed "
            "by their Monday"
        )
    return week_from_date(day)


def _parse_count(token: str, row: int) -> int:
    token = token.strip()
    try:
        value = int(token)
    except ValueError:
        # tolerate float spellings of integers (e.g. "3.0") but nothing else
        try:
            as_float = float(token)
        except ValueError:
            raise DataError(f"row {row}: count {token!r} is not an integer") from None
        if not as_float.is_integer():
            raise DataError(f"row {row}: count {token!r} is not an integer")
        value = int(as_float)
    if value < 0:
        raise DataError(f"row {row}: count {value} is negative")
    return value


def _missing_weeks(prev: str, cur: str) -> List[str]:
    out = []
    step = next_week(prev)
    while step != cur and len(out) < 10000:
        out.append(step)
        step = next_week(step)
    return out


def parse_series(text: str) -> CountSeries:
    """Parse CSV text into a :class:`CountSeries`.

    Accepts a header row ``week,count`` (case-insensitive, extra
    whitespace ignored).  Weeks must be consecutive; gaps raise a
    :class:`DataError` naming the missing weeks.
    """
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if any(field.strip() for field in r)]
    if not rows:
        raise DataError("empty input: expected a week,count header and data rows")
    header = [c.strip().lower() for c in rows[0]]
    if header[:2] != ["week", "count"]:
        raise DataError(
            f"bad header {rows[0][:2]!r}: expected ['week', 'count']"
        )
    if len(rows) < 2:
        raise DataError("no data rows after the header")

    weeks: List[str] = []
    counts: List[int] = []
    for i, fields in enumerate(rows[1:], start=2):
        if len(fields) < 2:
            raise DataError(f"row {i}: expected two fields, got {len(fields)}")
        weeks.append(_normalise_week(fields[0], i))
        counts.append(_parse_count(fields[1], i))

    mondays = [_dt.date.fromisocalendar(int(w[:4]), int(w[-2:]), 1) for w in weeks]
    for j in range(1, len(weeks)):
        if mondays[j] == mondays[j - 1]:
            raise DataError(f"row {j + 2}: duplicate week {weeks[j]}")
        if mondays[j] < mondays[j - 1]:
            raise DataError(
                f"row {j + 2}: week {weeks[j]} precedes {weeks[j - 1]}; "
                "rows must be in increasing week order"
            )
        if weeks[j] != next_week(weeks[j - 1]):
            gap = _missing_weeks(weeks[j - 1], weeks[j])
            shown = ", ".join(gap[:8])
            more = f" (+{len(gap) - 8} more)" if len(gap) > 8 else ""
            raise DataError(
                f"row {j + 2}: weeks are not consecutive; missing {shown}{more}"
            )

    try:
        return CountSeries(weeks, np.asarray(counts, dtype=np.int64))
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def read_series_csv(path: str | os.PathLike) -> CountSeries:
    """Read a weekly count series from ``path``."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return parse_series(text)


def format_series(series: CountSeries) -> str:
    """Render a series back to CSV text; inverse of :func:`parse_series`."""
    lines = ["week,count"]
    for week, count in zip(series.labels, series.counts):
        lines.append(f"{week},{int(count)}")
    return "\n".join(lines) + "\n"


def write_series_csv(series: CountSeries, path: str | os.PathLike) -> None:
    """Write a series as ``week,count`` CSV.  Round-trips exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_series(series))
