"""Price series and analyst-report corpus: loading, validation, lookup.

Dates are calendar dates, but all offsets elsewhere in the pipeline are
trading-day positions in the loaded price series, never calendar arithmetic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import date as Date
from pathlib import Path

from .errors import (
    EmptySeries,
    MalformedRecord,
    MalformedRow,
    MissingField,
    NonMonotonicDates,
    NoReportsForDate,
    OutOfRange,
)


class PriceSeries:
    """Ordered trading-day closes, indexable by integer position.

    Validates on construction: strictly increasing dates, finite positive
    closes, at least one row. Immutable afterwards; safe for shared reads.
    """

    def __init__(self, entries: list[tuple[Date, float]]):
        if not entries:
            raise EmptySeries("price series has no rows")
        dates = [d for d, _ in entries]
        for prev, cur in zip(dates, dates[1:]):
            if cur <= prev:
                raise NonMonotonicDates(f"date {cur} does not follow {prev}")
        for d, close in entries:
            if not math.isfinite(close) or close <= 0:
                raise MalformedRow(f"close {close!r} at {d} is not a positive finite number")
        self._dates: tuple[Date, ...] = tuple(dates)
        self._closes: tuple[float, ...] = tuple(float(c) for _, c in entries)
        self._positions: dict[Date, int] = {d: i for i, d in enumerate(dates)}

    def __len__(self) -> int:
        return len(self._dates)

    @property
    def dates(self) -> tuple[Date, ...]:
        return self._dates

    def position(self, d: Date) -> int:
        """Trading-day position of a date present in the series."""
        try:
            return self._positions[d]
        except KeyError:
            raise OutOfRange(f"{d} is not a trading date in the series") from None

    def date_at(self, position: int) -> Date:
        if not 0 <= position < len(self._dates):
            raise OutOfRange(f"position {position} outside [0, {len(self._dates)})")
        return self._dates[position]

    def close_at(self, position: int) -> float:
        """Close at an integer position. Single read path, so tests can
        instrument it to audit look-ahead access."""
        if not 0 <= position < len(self._closes):
            raise OutOfRange(f"position {position} outside [0, {len(self._closes)})")
        return self._closes[position]


@dataclass(frozen=True)
class ReportDoc:
    """One analyst report: publication date, title, body, view count."""

    date: Date
    title: str
    body: str
    view_count: int

    def __post_init__(self):
        if not self.body:
            raise MissingField("report body is empty")
        if self.view_count < 0:
            raise MalformedRecord(f"view_count {self.view_count} is negative")


class ReportCorpus:
    """Report documents grouped by date. Immutable after construction."""

    def __init__(self, docs: list[ReportDoc]):
        grouped: dict[Date, list[ReportDoc]] = {}
        for doc in docs:
            grouped.setdefault(doc.date, []).append(doc)
        self._by_date = grouped

    def dates(self) -> list[Date]:
        return sorted(self._by_date)

    def docs_for(self, d: Date) -> list[ReportDoc]:
        return list(self._by_date.get(d, []))

    def all_docs(self) -> list[ReportDoc]:
        return [doc for d in self.dates() for doc in self._by_date[d]]

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_date.values())


def load_price_series(path: str | Path) -> PriceSeries:
    """Parse a `date,close` CSV into a validated PriceSeries.

    Expects a header row, ISO-8601 dates, dot-decimal closes.

    Raises:
        MalformedRow: bad date or number in any row.
        NonMonotonicDates: rows out of date order or duplicated.
        EmptySeries: header only, or empty file.
    """
    entries: list[tuple[Date, float]] = []
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    body = lines[1:] if lines and lines[0].strip().lower() == "date,close" else lines
    for lineno, line in enumerate(body, start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise MalformedRow(f"line {lineno}: expected 2 columns, got {len(parts)}")
        raw_date, raw_close = parts[0].strip(), parts[1].strip()
        try:
            d = Date.fromisoformat(raw_date)
        except ValueError:
            raise MalformedRow(f"line {lineno}: bad date {raw_date!r}") from None
        try:
            close = float(raw_close)
        except ValueError:
            raise MalformedRow(f"line {lineno}: bad close {raw_close!r}") from None
        if not math.isfinite(close) or close <= 0:
            raise MalformedRow(f"line {lineno}: close {raw_close!r} is not positive finite")
        entries.append((d, close))
    return PriceSeries(entries)


_REPORT_FIELDS = ("date", "title", "body", "views")


def load_reports(path: str | Path) -> ReportCorpus:
    """Load a JSON-lines report file (one object per line) into a corpus.

    Each record needs keys date, title, body, views. An empty file is a
    valid empty corpus.
    """
    path = Path(path)
    docs: list[ReportDoc] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(f"{path.name}:{lineno}: {exc}") from None
            if not isinstance(record, dict):
                raise MalformedRecord(f"{path.name}:{lineno}: not a JSON object")
            for field in _REPORT_FIELDS:
                if field not in record:
                    raise MissingField(f"{path.name}:{lineno}: missing {field!r}")
            try:
                doc = ReportDoc(
                    date=Date.fromisoformat(str(record["date"])),
                    title=str(record["title"]),
                    body=str(record["body"]),
                    view_count=int(record["views"]),
                )
            except (ValueError, TypeError) as exc:
                raise MalformedRecord(f"{path.name}:{lineno}: {exc}") from None
            docs.append(doc)
    return ReportCorpus(docs)


def save_reports(corpus: ReportCorpus, path: str | Path) -> None:
    """Write a corpus back to JSON-lines in canonical field order."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus.all_docs():
            record = {
                "date": doc.date.isoformat(),
                "title": doc.title,
                "body": doc.body,
                "views": doc.view_count,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def top_reports(corpus: ReportCorpus, d: Date, n: int = 3) -> list[ReportDoc]:
    """Up to n docs for date d, most-viewed first; view-count ties broken by
    title ascending so the selection is deterministic."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    docs = corpus.docs_for(d)
    if not docs:
        raise NoReportsForDate(f"no reports for {d}")
    ranked = sorted(docs, key=lambda doc: (-doc.view_count, doc.title))
    return ranked[:n]


def trading_offset(series: PriceSeries, d: Date, j: int) -> Date:
    """Date at trading position(d) + j; holidays and weekends never count."""
    target = series.position(d) + j
    if not 0 <= target < len(series):
        raise OutOfRange(f"{d} {j:+d} trading days falls outside the series")
    return series.date_at(target)


def align_to_trading_days(corpus: ReportCorpus, series: PriceSeries) -> ReportCorpus:
    """Re-key docs published on non-trading days to the next trading day.

    Docs dated after the last trading day are dropped (nothing to attach
    them to). Docs already on trading days keep their date.
    """
    trading = series.dates
    moved: list[ReportDoc] = []
    for doc in corpus.all_docs():
        if doc.date in trading:
            moved.append(doc)
            continue
        nxt = next((t for t in trading if t > doc.date), None)
        if nxt is None:
            continue
        moved.append(ReportDoc(date=nxt, title=doc.title, body=doc.body, view_count=doc.view_count))
    return ReportCorpus(moved)
