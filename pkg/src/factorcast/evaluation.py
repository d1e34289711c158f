"""Backtest metrics (ACC, MCC, RMSE) and classical baseline forecasters.

Baselines: naive (last value), drift (last value plus mean step), and a
least-squares AR(p) on the target-delta series, refit walk-forward so no
fit ever sees data past its question date.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date as Date
from typing import Sequence

import numpy as np

from .errors import Empty, LengthMismatch, MisalignedDates, SingularDesign, TooShort

BASELINE_KINDS = ("naive", "drift", "ar")


def direction(x: float, tie: int = 1) -> int:
    """Up/down class of a change; exact zeros map to the tie class (+1 by default)."""
    if x > 0:
        return 1
    if x < 0:
        return -1
    return tie


def _check_pairs(preds: Sequence[float], actuals: Sequence[float]) -> None:
    if len(preds) != len(actuals):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(actuals)} actuals")
    if len(preds) == 0:
        raise Empty("no samples")


def _directional_pairs(
    preds: Sequence[float], actuals: Sequence[float], tie_mode: str
) -> list[tuple[int, int]]:
    if tie_mode == "up":
        return [(direction(p), direction(a)) for p, a in zip(preds, actuals)]
    if tie_mode == "drop":
        return [
            (direction(p), direction(a))
            for p, a in zip(preds, actuals)
            if p != 0 and a != 0
        ]
    raise ValueError(f"unknown tie_mode {tie_mode!r}")


def accuracy(preds: Sequence[float], actuals: Sequence[float], tie_mode: str = "up") -> float:
    """Fraction of samples whose predicted direction matches the actual one."""
    _check_pairs(preds, actuals)
    pairs = _directional_pairs(preds, actuals, tie_mode)
    if not pairs:
        raise Empty("all samples dropped as ties")
    return sum(1 for p, a in pairs if p == a) / len(pairs)


def mcc(preds: Sequence[float], actuals: Sequence[float], tie_mode: str = "up") -> float:
    """Matthews correlation over binary up/down classes.

    Any empty confusion-matrix margin makes the denominator zero; the
    conventional value then is 0.
    """
    _check_pairs(preds, actuals)
    pairs = _directional_pairs(preds, actuals, tie_mode)
    if not pairs:
        raise Empty("all samples dropped as ties")
    tp = sum(1 for p, a in pairs if p == 1 and a == 1)
    tn = sum(1 for p, a in pairs if p == -1 and a == -1)
    fp = sum(1 for p, a in pairs if p == 1 and a == -1)
    fn = sum(1 for p, a in pairs if p == -1 and a == 1)
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def rmse(preds: Sequence[float], actuals: Sequence[float]) -> float:
    _check_pairs(preds, actuals)
    return math.sqrt(sum((p - a) ** 2 for p, a in zip(preds, actuals)) / len(preds))


@dataclass(frozen=True)
class BaselineModel:
    """A fitted (or fit-free) baseline forecaster."""

    kind: str
    order: int = 0
    intercept: float = 0.0
    coefficients: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if self.kind == "ar" and self.order < 1:
            raise ValueError("ar baseline needs order >= 1")


def fit_ar(series: Sequence[float], p: int) -> BaselineModel:
    """Least-squares fit of x_t = c + sum_i phi_i x_(t-i) over the series.

    Raises:
        TooShort: fewer than p + 10 observations.
        SingularDesign: rank-deficient design (e.g. a constant series).
    """
    if p < 1:
        raise ValueError(f"order must be >= 1, got {p}")
    n = len(series)
    if n < p + 10:
        raise TooShort(f"need at least {p + 10} observations for AR({p}), have {n}")
    x = np.asarray(series, dtype=float)
    rows = n - p
    design = np.ones((rows, p + 1))
    for i in range(1, p + 1):
        design[:, i] = x[p - i: n - i]
    target = x[p:]
    coeffs, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < p + 1:
        raise SingularDesign(f"design matrix rank {rank} < {p + 1}")
    return BaselineModel(
        kind="ar",
        order=p,
        intercept=float(coeffs[0]),
        coefficients=tuple(float(c) for c in coeffs[1:]),
    )


def baseline_forecast(model: BaselineModel, history: Sequence[float]) -> float:
    """One-step-ahead forecast from the most recent history values."""
    if model.kind == "naive":
        if not history:
            raise TooShort("naive forecast needs at least 1 observation")
        return float(history[-1])
    if model.kind == "drift":
        if len(history) < 2:
            raise TooShort("drift forecast needs at least 2 observations")
        mean_step = (history[-1] - history[0]) / (len(history) - 1)
        return float(history[-1] + mean_step)
    if len(history) < model.order:
        raise TooShort(f"AR({model.order}) forecast needs {model.order} observations")
    value = model.intercept
    for i, phi in enumerate(model.coefficients, start=1):
        value += phi * history[-i]
    return float(value)


@dataclass(frozen=True)
class EvalCell:
    model: str
    lookback: int
    acc: float
    mcc: float
    rmse: float
    n: int

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("every reported cell needs n > 0")


@dataclass(frozen=True)
class EvalSummary:
    cells: tuple[EvalCell, ...]

    def cell(self, model: str, lookback: int) -> EvalCell:
        for c in self.cells:
            if c.model == model and c.lookback == lookback:
                return c
        raise KeyError((model, lookback))


def evaluate_run(
    llm_label: str,
    forecasts_by_l: dict[int, dict[Date, tuple[float, float]]],
    baseline_preds: dict[str, dict[int, dict[Date, float]]],
    l_grid: Sequence[int],
    tie_mode: str = "up",
) -> EvalSummary:
    """Metric grid over the backtest: rows = models, column groups = lookbacks.

    `forecasts_by_l[l][date] = (prediction, actual)`; baseline predictions
    must cover exactly the same dates, else MisalignedDates.
    """
    cells = []
    for l in sorted(l_grid):
        dated = forecasts_by_l.get(l, {})
        if not dated:
            raise Empty(f"no forecasts for lookback {l}")
        dates = sorted(dated)
        actuals = [dated[d][1] for d in dates]
        preds = [dated[d][0] for d in dates]
        cells.append(
            EvalCell(
                model=llm_label,
                lookback=l,
                acc=accuracy(preds, actuals, tie_mode),
                mcc=mcc(preds, actuals, tie_mode),
                rmse=rmse(preds, actuals),
                n=len(dates),
            )
        )
        for model_name in baseline_preds:
            per_l = baseline_preds[model_name].get(l, {})
            missing = [d for d in dates if d not in per_l]
            if missing:
                raise MisalignedDates(
                    f"{model_name} (lookback {l}) missing dates: {missing[:3]}"
                )
            bpreds = [per_l[d] for d in dates]
            cells.append(
                EvalCell(
                    model=model_name,
                    lookback=l,
                    acc=accuracy(bpreds, actuals, tie_mode),
                    mcc=mcc(bpreds, actuals, tie_mode),
                    rmse=rmse(bpreds, actuals),
                    n=len(dates),
                )
            )
    return EvalSummary(cells=tuple(cells))
