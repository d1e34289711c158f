"""Few-shot context assembly: truncated price deltas and the moving 5-shot window.

The window for question date d holds the context sets of the five preceding
trading days, most recent first. The latest price any shot delta reads is
the close at d itself, so the prompt can never see past the question date.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date as Date

from .corpus import PriceSeries, trading_offset
from .errors import MissingFactors, OutOfRange
from .factors import FactorSet

SHOT_COUNT = 5


def truncate(x: float, mode: str = "toward-zero") -> int:
    """Drop the decimal part of a price difference.

    Default is truncation toward zero, which keeps the sign symmetric;
    mode "floor" is the alternative reading.
    """
    if not math.isfinite(x):
        raise ValueError(f"cannot truncate non-finite value {x!r}")
    if mode == "toward-zero":
        return math.trunc(x)
    if mode == "floor":
        return math.floor(x)
    raise ValueError(f"unknown truncation mode {mode!r}")


@dataclass(frozen=True)
class PriceDelta:
    """Truncated difference between the next close and a look-back close."""

    date: Date
    lookback: int
    value: int


@dataclass(frozen=True)
class ContextSet:
    """A day's factor set bundled with its realized price delta."""

    factors: FactorSet
    delta: PriceDelta

    def __post_init__(self):
        if self.factors.date != self.delta.date:
            raise ValueError(f"factor date {self.factors.date} != delta date {self.delta.date}")


@dataclass(frozen=True)
class ShotWindow:
    question_date: Date
    lookback: int
    shots: tuple[ContextSet, ...]

    def __post_init__(self):
        if len(self.shots) != SHOT_COUNT:
            raise ValueError(f"expected {SHOT_COUNT} shots, got {len(self.shots)}")


def price_delta(series: PriceSeries, d: Date, l: int, g_mode: str = "toward-zero") -> PriceDelta:
    """Delta at date d for look-back l: truncated close(d+1) - close(d-l).

    Raises OutOfRange when position d+1 or d-l falls outside the series.
    """
    if l < 0:
        raise ValueError(f"lookback must be >= 0, got {l}")
    pos = series.position(d)
    ahead, back = pos + 1, pos - l
    if ahead >= len(series) or back < 0:
        raise OutOfRange(f"delta at {d} with lookback {l} needs positions {back} and {ahead}")
    value = truncate(series.close_at(ahead) - series.close_at(back), mode=g_mode)
    return PriceDelta(date=d, lookback=l, value=value)


def build_shot_window(
    series: PriceSeries,
    factors_by_date: dict[Date, FactorSet],
    d: Date,
    l: int,
    g_mode: str = "toward-zero",
) -> ShotWindow:
    """Assemble the 5-shot window for question date d, most recent shot first.

    Shot j sits at d-j trading days; its delta reads closes no later than
    d-j+1 <= d, so no shot leaks information past the question date.

    Raises:
        MissingFactors: no factor set for one of the five shot dates.
        OutOfRange: the series is too short for a shot's delta.
    """
    shots = []
    for j in range(1, SHOT_COUNT + 1):
        shot_date = trading_offset(series, d, -j)
        factors = factors_by_date.get(shot_date)
        if factors is None:
            raise MissingFactors(f"no factor set for shot date {shot_date} (question {d})")
        shots.append(ContextSet(factors=factors, delta=price_delta(series, shot_date, l, g_mode)))
    return ShotWindow(question_date=d, lookback=l, shots=tuple(shots))
