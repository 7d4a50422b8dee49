"""Reading and writing metric records (CSV with an optional JSON mirror)."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable

from .metrics import METRIC_COLUMNS, RATIONAL_METRICS, ClassMetricsRecord

CSV_HEADER = ("version", "class", *METRIC_COLUMNS)


class RecordFormatError(ValueError):
    """A metrics file that cannot be read; the message names file and line."""


def format_value(metric: str, value: float) -> str:
    if metric in RATIONAL_METRICS:
        return f"{value:.6f}"
    return str(int(value))


def records_to_csv(records: Iterable[ClassMetricsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(records, key=lambda r: (r.class_name, r.version)):
        w.writerow([r.version, r.class_name, *(format_value(m, getattr(r, m)) for m in METRIC_COLUMNS)])
    return buf.getvalue()


def records_to_json(records: Iterable[ClassMetricsRecord]) -> str:
    rows = []
    for r in sorted(records, key=lambda r: (r.class_name, r.version)):
        row: dict = {"version": r.version, "class": r.class_name}
        for m in METRIC_COLUMNS:
            v = getattr(r, m)
            row[m] = round(v, 6) if m in RATIONAL_METRICS else int(v)
        rows.append(row)
    return json.dumps({"records": rows}, indent=2, sort_keys=False) + "\n"


def _parse_row(row: list[str], where: str) -> ClassMetricsRecord:
    if len(row) != len(CSV_HEADER):
        raise RecordFormatError(f"{where}: expected {len(CSV_HEADER)} fields, got {len(row)}")
    values: dict = {}
    for name, text in zip(METRIC_COLUMNS, row[2:]):
        try:
            v = float(text) if name in RATIONAL_METRICS else int(text)
        except ValueError:
            # tolerate integral floats like "3.0" in integer columns
            try:
                f = float(text)
            except ValueError:
                raise RecordFormatError(f"{where}: column {name!r} is not numeric: {text!r}") from None
            if name in RATIONAL_METRICS or not f.is_integer():
                raise RecordFormatError(f"{where}: column {name!r} is not an integer: {text!r}") from None
            v = int(f)
        if isinstance(v, float) and not math.isfinite(v):
            raise RecordFormatError(f"{where}: column {name!r} is not finite")
        values[name] = v
    if not row[1]:
        raise RecordFormatError(f"{where}: empty class name")
    return ClassMetricsRecord(version=row[0], class_name=row[1], **values)


def parse_csv(text: str, source: str = "<csv>") -> list[ClassMetricsRecord]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise RecordFormatError(f"{source}:1: empty file, header missing") from None
    if tuple(h.strip().lower() for h in header) != CSV_HEADER:
        raise RecordFormatError(f"{source}:1: unexpected header {','.join(header)!r}")
    out = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        out.append(_parse_row(row, f"{source}:{reader.line_num}"))
    return out


def read_csv(path: Path) -> list[ClassMetricsRecord]:
    return parse_csv(Path(path).read_text(encoding="utf-8"), str(path))


def read_records(paths: Iterable[Path]) -> list[ClassMetricsRecord]:
    """Concatenate several record files into one data set."""
    out: list[ClassMetricsRecord] = []
    for p in paths:
        out.extend(read_csv(p))
    return out
