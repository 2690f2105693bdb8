"""Daily sentiment aggregation, price alignment and the directional report."""

from __future__ import annotations

import csv
import datetime as dt
from bisect import bisect_left
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import DocumentSet
from .labels import Label

__all__ = [
    "PricePoint",
    "PriceSeries",
    "DailyRow",
    "DailySentiment",
    "AlignedRow",
    "AlignedTable",
    "daily_sentiment",
    "load_prices",
    "align",
    "directional_report",
    "write_aligned_csv",
    "read_aligned_csv",
]


@dataclass(frozen=True)
class PricePoint:
    date: dt.date
    close: float


@dataclass(frozen=True)
class PriceSeries:
    points: tuple[PricePoint, ...]
    currency: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(self.points))
        for a, b in zip(self.points, self.points[1:]):
            if not a.date < b.date:
                raise ValueError(f"price dates must be strictly increasing ({a.date} then {b.date})")
        for p in self.points:
            if not p.close > 0:
                raise ValueError(f"price on {p.date} must be positive")

    def __len__(self) -> int:
        return len(self.points)


def load_prices(path: str | Path, currency: str = "") -> PriceSeries:
    points = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"date", "close"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 'date,close'")
        for row in reader:
            points.append(PricePoint(dt.date.fromisoformat(row["date"].strip()), float(row["close"])))
    return PriceSeries(tuple(points), currency)


def _resolve(pos: int, neg: int, neu: int) -> Label:
    top = max(pos, neg, neu)
    winners = [lab for lab, n in ((Label.POSITIVE, pos), (Label.NEGATIVE, neg), (Label.NEUTRAL, neu)) if n == top]
    return winners[0] if len(winners) == 1 else Label.NEUTRAL


@dataclass(frozen=True)
class DailyRow:
    date: dt.date
    label: Label
    pos: int
    neg: int
    neu: int


@dataclass(frozen=True)
class DailySentiment:
    rows: tuple[DailyRow, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))
        for a, b in zip(self.rows, self.rows[1:]):
            if not a.date < b.date:
                raise ValueError("daily sentiment dates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.rows)


def daily_sentiment(predictions: Mapping[str, Label], documents: DocumentSet) -> DailySentiment:
    """Majority label per document date; a tied maximum resolves to Neutral.

    Predictions other than Positive/Negative (Neutral, NotDetected, Other)
    count as neutral votes.
    """
    by_id = documents.by_id()
    tallies: dict[dt.date, list[int]] = defaultdict(lambda: [0, 0, 0])
    for doc_id, label in predictions.items():
        if doc_id not in by_id:
            raise ValueError(f"prediction for unknown document {doc_id!r}")
        slot = 0 if label is Label.POSITIVE else 1 if label is Label.NEGATIVE else 2
        tallies[by_id[doc_id].date][slot] += 1
    rows = [DailyRow(d, _resolve(*c), *c) for d, c in sorted(tallies.items())]
    return DailySentiment(tuple(rows))


@dataclass(frozen=True)
class AlignedRow:
    date: dt.date
    close: float
    label: Label
    pos: int
    neg: int
    neu: int


@dataclass(frozen=True)
class AlignedTable:
    rows: tuple[AlignedRow, ...]
    dropped: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return len(self.rows)


def align(
    sentiment: DailySentiment,
    prices: PriceSeries,
    start: dt.date | None = None,
    end: dt.date | None = None,
    carry_forward: bool = False,
) -> AlignedTable:
    """Inner join of sentiment days and price days inside ``[start, end]``.

    Sentiment on a non-trading day is dropped (and counted in ``dropped``)
    unless ``carry_forward`` moves it to the next trading day in the window,
    where its counts merge with that day's.
    """
    if start is not None and end is not None and start > end:
        raise ValueError("window start must not be after its end")

    def inside(d: dt.date) -> bool:
        return (start is None or d >= start) and (end is None or d <= end)

    price_points = [p for p in prices.points if inside(p.date)]
    price_dates = [p.date for p in price_points]
    close_by_date = {p.date: p.close for p in price_points}
    merged: dict[dt.date, list[int]] = {}
    dropped = 0
    for row in sentiment.rows:
        if not inside(row.date):
            continue
        target = row.date
        if target not in close_by_date:
            if not carry_forward:
                dropped += 1
                continue
            i = bisect_left(price_dates, target)
            if i == len(price_dates):
                dropped += 1
                continue
            target = price_dates[i]
        counts = merged.setdefault(target, [0, 0, 0])
        counts[0] += row.pos
        counts[1] += row.neg
        counts[2] += row.neu
    if not merged:
        raise ValueError("no sentiment day matches a price day in the window")
    rows = tuple(
        AlignedRow(d, close_by_date[d], _resolve(*c), *c) for d, c in sorted(merged.items())
    )
    return AlignedTable(rows, dropped)


@dataclass(frozen=True)
class Run:
    label: Label
    start: dt.date
    end: dt.date
    days: int
    price_move: float

    def to_json(self) -> dict:
        return {
            "label": self.label.value,
            "start": self.start.isoformat(),
            "end": self.end.isoformat(),
            "days": self.days,
            "price_move": self.price_move,
        }


def directional_report(table: AlignedTable | Sequence[AlignedRow], horizon: int = 1) -> dict:
    """Compare each polar day's label with the sign of the price move ``horizon`` rows later.

    Days with no price move are tallied as ``zero_moves`` and excluded from
    the match fraction, which is ``None`` when nothing could be evaluated.
    Runs are maximal stretches of consecutive rows with the same polar label;
    their ``price_move`` spans from the run's first close to the close
    ``horizon`` rows after its last day (clipped to the table end).
    """
    rows = table.rows if isinstance(table, AlignedTable) else tuple(table)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if len(rows) < horizon + 1:
        raise ValueError(f"need at least {horizon + 1} rows, got {len(rows)}")
    stats = {
        "positive": {"days": 0, "matches": 0},
        "negative": {"days": 0, "matches": 0},
    }
    zero_moves = 0
    neutral_days = 0
    for t in range(len(rows) - horizon):
        row = rows[t]
        if row.label not in (Label.POSITIVE, Label.NEGATIVE):
            neutral_days += 1
            continue
        move = rows[t + horizon].close - row.close
        if move == 0:
            zero_moves += 1
            continue
        bucket = stats[row.label.value]
        bucket["days"] += 1
        if (move > 0) == (row.label is Label.POSITIVE):
            bucket["matches"] += 1
    evaluated = stats["positive"]["days"] + stats["negative"]["days"]
    matches = stats["positive"]["matches"] + stats["negative"]["matches"]

    runs: list[Run] = []
    i = 0
    while i < len(rows):
        lab = rows[i].label
        if lab not in (Label.POSITIVE, Label.NEGATIVE):
            i += 1
            continue
        j = i
        while j + 1 < len(rows) and rows[j + 1].label is lab:
            j += 1
        stop = min(j + horizon, len(rows) - 1)
        runs.append(Run(lab, rows[i].date, rows[j].date, j - i + 1, rows[stop].close - rows[i].close))
        i = j + 1
    return {
        "horizon": horizon,
        "rows": len(rows),
        "evaluated": evaluated,
        "matches": matches,
        "match_fraction": matches / evaluated if evaluated else None,
        "zero_moves": zero_moves,
        "neutral_days": neutral_days,
        "by_sign": stats,
        "runs": [r.to_json() for r in runs],
    }


CSV_HEADER = ("date", "close", "label", "pos", "neg", "neu")


def write_aligned_csv(table: AlignedTable, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in table.rows:
            writer.writerow([r.date.isoformat(), repr(r.close), r.label.value, r.pos, r.neg, r.neu])


def read_aligned_csv(path: str | Path) -> AlignedTable:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for rec in reader:
            rows.append(
                AlignedRow(
                    dt.date.fromisoformat(rec["date"]),
                    float(rec["close"]),
                    Label(rec["label"]),
                    int(rec["pos"]),
                    int(rec["neg"]),
                    int(rec["neu"]),
                )
            )
    return AlignedTable(tuple(rows))
