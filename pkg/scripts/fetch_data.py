#!/usr/bin/env python3
"""Fetch the two public weekly sea-crossing count series.

The package does not vendor these datasets (they are refreshed by their
publishers and carry their own licensing terms); this script documents
where they live and turns either source into the package's
``week,count`` CSV schema.

Sources
-------
italy
    UNHCR Operational Data Portal, Mediterranean sea arrivals to Italy.
    Portal page: https://data.unhcr.org/en/situations/europe-sea-arrivals/location/24521
    The portal's chart widgets are backed by JSON endpoints under
    https://data.unhcr.org/population/get/timeseries; the widget id is
    assigned per chart and changes when UNHCR rearranges the page, so
    pass the endpoint you see in the browser's network tab via --url.
    Daily arrival records are summed into ISO weeks.

uk
    UK Home Office, migrants detected crossing the English Channel in
    small boats.  Landing page:
    https://www.gov.uk/government/publications/migrants-detected-crossing-the-english-channel-in-small-boats/migrants-detected-crossing-the-english-channel-in-small-boats-last-7-days
    The full daily history is published as a CSV/ODS attachment on the
    statistics pages; attachment URLs change with every release, so pass
    the current CSV link via --url.  Daily detections are summed into
    ISO weeks.

Both publishers move their endpoints from time to time.  When a
download fails, fetch the raw export by hand in a browser and feed it
to this script with --from-file; any CSV with a parseable date column
and a count column works.

Usage
-----
    python scripts/fetch_data.py --dataset italy --out data/italy.csv
    python scripts/fetch_data.py --dataset uk --from-file export.csv --out data/uk.csv
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import sys
from collections import OrderedDict

PORTAL_PAGES = {
    "italy": "https://data.unhcr.org/en/situations/europe-sea-arrivals/location/24521",
    "uk": ("https://www.gov.uk/government/publications/"
           "migrants-detected-crossing-the-english-channel-in-small-boats/"
           "migrants-detected-crossing-the-english-channel-in-small-boats-last-7-days"),
}

DATE_FORMATS = ("%Y-%m-%d", "%d/%m/%Y", "%d %b %Y", "%d %B %Y", "%Y/%m/%d")


def parse_date(text: str) -> dt.date:
    text = text.strip()
    for fmt in DATE_FORMATS:
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            continue
    raise ValueError(f"unrecognised date {text!r}")


def sniff_columns(header: list[str]) -> tuple[int, int]:
    """Locate the date and count columns by name."""
    lowered = [h.strip().lower() for h in header]
    date_idx = count_idx = None
    for i, name in enumerate(lowered):
        if date_idx is None and ("date" in name or name in ("day", "week")):
            date_idx = i
        if count_idx is None and any(
                k in name for k in ("count", "arrival", "individual",
                                    "migrant", "detected", "total", "value")):
            count_idx = i
    if date_idx is None or count_idx is None:
        raise ValueError(
            f"cannot find date/count columns in header {header!r}; "
            "rename the columns or trim the file to two columns")
    return date_idx, count_idx


def daily_records_from_csv(text: str) -> list[tuple[dt.date, int]]:
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise ValueError("empty export")
    date_idx, count_idx = sniff_columns(rows[0])
    records = []
    for r in rows[1:]:
        raw = r[count_idx].strip().replace(",", "")
        if not raw:
            continue
        records.append((parse_date(r[date_idx]), int(float(raw))))
    if not records:
        raise ValueError("no data rows found")
    return records


def daily_records_from_json(text: str) -> list[tuple[dt.date, int]]:
    """UNHCR timeseries widgets return {'data': {'timeseries': [...]}} with
    per-day entries carrying a date and an 'individuals' count."""
    payload = json.loads(text)
    node = payload
    for key in ("data", "timeseries"):
        if isinstance(node, dict) and key in node:
            node = node[key]
    if not isinstance(node, list):
        raise ValueError("unexpected JSON layout; pass a CSV via --from-file")
    records = []
    for entry in node:
        date_key = next((k for k in entry if "date" in k.lower()), None)
        val_key = next((k for k in entry
                        if any(s in k.lower() for s in ("individual", "count", "value"))),
                       None)
        if date_key and val_key:
            records.append((parse_date(str(entry[date_key])),
                            int(float(entry[val_key]))))
    if not records:
        raise ValueError("no usable entries in JSON; pass a CSV via --from-file")
    return records


def weekly_series(records: list[tuple[dt.date, int]]) -> "OrderedDict[str, int]":
    """Sum daily records into consecutive ISO weeks.

    Weeks between the first and last observed record that received no
    records at all count as zero weeks: for these sources an absent day
    means no arrivals, not missing data.  The possibly partial first and
    last weeks are dropped so every emitted week covers seven days.
    """
    records.sort(key=lambda pair: pair[0])
    first, last = records[0][0], records[-1][0]
    # clip to whole Monday..Sunday weeks
    start = first + dt.timedelta(days=(8 - first.isoweekday()) % 7)
    stop = last - dt.timedelta(days=last.isoweekday() % 7)
    totals: "OrderedDict[str, int]" = OrderedDict()
    day = start
    while day <= stop:
        year, week, _ = day.isocalendar()
        totals[f"{year}-W{week:02d}"] = 0
        day += dt.timedelta(weeks=1)
    for date, count in records:
        if start <= date <= stop + dt.timedelta(days=6):
            year, week, _ = date.isocalendar()
            key = f"{year}-W{week:02d}"
            if key in totals:
                totals[key] += count
    if len(totals) < 2:
        raise ValueError("fewer than two whole weeks of data")
    return totals


def write_weekly_csv(totals: "OrderedDict[str, int]", out_path: str) -> None:
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("week,count\n")
        for week, count in totals.items():
            fh.write(f"{week},{count}\n")


def download(url: str) -> str:
    import requests

    resp = requests.get(url, timeout=60,
                        headers={"User-Agent": "zipvol-fetch/0.1"})
    resp.raise_for_status()
    return resp.text


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--dataset", choices=("italy", "uk"), required=True)
    parser.add_argument("--out", required=True, help="weekly CSV to write")
    parser.add_argument("--url", default=None,
                        help="explicit export endpoint (see module docstring)")
    parser.add_argument("--from-file", default=None,
                        help="already-downloaded export (CSV or JSON)")
    args = parser.parse_args(argv)

    if args.from_file:
        with open(args.from_file, "r", encoding="utf-8-sig") as fh:
            text = fh.read()
    elif args.url:
        text = download(args.url)
    else:
        print(f"No --url or --from-file given.  The {args.dataset} series is "
              f"published at:\n  {PORTAL_PAGES[args.dataset]}\n"
              "Endpoints behind these pages change; grab the export link "
              "from the page (or the browser network tab) and rerun with "
              "--url, or download it by hand and rerun with --from-file.",
              file=sys.stderr)
        return 1

    stripped = text.lstrip()
    if stripped.startswith("{") or stripped.startswith("["):
        records = daily_records_from_json(text)
    else:
        records = daily_records_from_csv(text)
    totals = weekly_series(records)
    write_weekly_csv(totals, args.out)
    weeks = list(totals)
    print(f"wrote {args.out}: {len(totals)} weeks, {weeks[0]} .. {weeks[-1]}, "
          f"total {sum(totals.values())}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
