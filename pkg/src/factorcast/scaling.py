"""Score/price scaling: Student-t quantiles, rolling delta bounds, multipliers.

The chain: a distribution multiplier widens the rolling min/max of recent
deltas against outliers; a per-date factor multiplier maps delta units onto
the bounded score range; shot deltas shown in the prompt are scaled up, and
the model's total score is divided back into delta units.

The t-quantile is computed dependency-free: the CDF goes through a
continued-fraction evaluation of the regularized incomplete beta function
(relative error <= 1e-12), and the quantile inverts it by bisection to an
interval width of 1e-9.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from datetime import date as Date
from typing import Callable, Sequence

from .context import PriceDelta, ShotWindow
from .errors import DomainError, InsufficientHistory, NonpositiveMultiplier


@dataclass(frozen=True)
class ScalingParams:
    """Knobs for the scaling chain.

    Defaults: per-factor score cap 2, 10 factors, 21 trading-day rolling
    window (one market month), quantile pair 0.99/0.95 on a t-distribution
    with 21 degrees of freedom.
    """

    score_max: int = 2
    n_factors: int = 10
    window: int = 21
    p_hi: float = 0.99
    p_lo: float = 0.95
    df: int = 21

    def __post_init__(self):
        if self.score_max < 1 or self.n_factors < 1 or self.window < 1 or self.df < 1:
            raise ValueError("score_max, n_factors, window, df must all be >= 1")
        if not 0.0 < self.p_lo < self.p_hi < 1.0:
            raise ValueError(f"need 0 < p_lo < p_hi < 1, got p_lo={self.p_lo}, p_hi={self.p_hi}")

    @property
    def score_span(self) -> int:
        """Largest possible |total score|: score_max * n_factors."""
        return self.score_max * self.n_factors


@dataclass(frozen=True)
class RollingBounds:
    date: Date
    x_min: int
    x_max: int

    def __post_init__(self):
        if self.x_min > self.x_max:
            raise ValueError(f"x_min {self.x_min} > x_max {self.x_max}")


@dataclass(frozen=True)
class ScaledShotValue:
    date: Date
    raw: int
    multiplier: float
    scaled: float
    displayed: int

    def __post_init__(self):
        if self.scaled != self.raw * self.multiplier:
            raise ValueError("scaled value is not raw * multiplier")
        if self.displayed != round_half_away_from_zero(self.scaled):
            raise ValueError("displayed value is not the rounded scaled value")


def round_half_away_from_zero(x: float) -> int:
    """Integer rounding where halves move away from zero (so -3.5 -> -4)."""
    if x >= 0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


# --- Student-t numerics ------------------------------------------------------

_BETACF_MAX_ITER = 300
_BETACF_EPS = 3e-14
_BETACF_FPMIN = 1e-300
_BISECT_WIDTH = 1e-9


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Modified Lentz evaluation of the incomplete-beta continued fraction.
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETACF_FPMIN:
        d = _BETACF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_FPMIN:
            d = _BETACF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETACF_FPMIN:
            c = _BETACF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _BETACF_FPMIN:
            d = _BETACF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _BETACF_FPMIN:
            c = _BETACF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), the regularized incomplete beta function."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # Use the continued fraction on whichever side converges fast.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def t_cdf(t: float, df: int) -> float:
    """CDF of Student's t with df degrees of freedom."""
    if df < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df}")
    x = df / (df + t * t)
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x)
    return tail if t <= 0 else 1.0 - tail


def t_quantile(p: float, df: int) -> float:
    """Inverse t CDF by bracketed bisection; absolute error <= 1e-6.

    Raises DomainError unless 0 < p < 1 and df >= 1.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie strictly inside (0, 1), got {p}")
    if df < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df)
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < p and hi < 1e15:
        hi *= 2.0
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- multipliers --------------------------------------------------------------

def dist_multiplier(params: ScalingParams) -> float:
    """Quantile ratio qt(p_hi, df) / qt(p_lo, df); 1.463 at the defaults."""
    return t_quantile(params.p_hi, params.df) / t_quantile(params.p_lo, params.df)


def rolling_bounds(deltas: Sequence[PriceDelta], t: Date, params: ScalingParams) -> RollingBounds:
    """Min/max over the `window` most recent deltas ending at date t.

    `deltas` must be ordered by date and contain an entry for t.

    Raises InsufficientHistory when fewer than `window` deltas exist at or
    before t (or t has no delta at all).
    """
    dates = [d.date for d in deltas]
    idx = bisect_right(dates, t) - 1
    if idx < 0 or dates[idx] != t:
        raise InsufficientHistory(f"no delta recorded for {t}")
    if idx + 1 < params.window:
        raise InsufficientHistory(
            f"need {params.window} deltas at or before {t}, have {idx + 1}"
        )
    values = [d.value for d in deltas[idx + 1 - params.window: idx + 1]]
    return RollingBounds(date=t, x_min=min(values), x_max=max(values))


def factor_multiplier(bounds: RollingBounds, params: ScalingParams, m_dist: float) -> float:
    """Per-date multiplier mapping delta units onto the score range.

    The smaller of |span / (m_dist * x_min)| and |span / (m_dist * x_max)|,
    where span = score_max * n_factors. A zero bound would make its ratio
    infinite and simply drops out of the min; if both bounds are zero the
    window is flat and the multiplier is the identity.
    """
    if m_dist <= 0:
        raise ValueError(f"m_dist must be positive, got {m_dist}")
    span = params.score_span
    ratios = []
    if bounds.x_min != 0:
        ratios.append(abs(-span / (m_dist * bounds.x_min)))
    if bounds.x_max != 0:
        ratios.append(abs(span / (m_dist * bounds.x_max)))
    if not ratios:
        return 1.0
    return min(ratios)


def scale_shots(
    window: ShotWindow,
    bounds_fn: Callable[[Date], RollingBounds],
    params: ScalingParams,
    m_dist: float,
) -> list[ScaledShotValue]:
    """Scale each shot's raw delta by its own date's factor multiplier.

    The displayed value is the half-away-from-zero rounded integer shown in
    the prompt; the unrounded value is kept for the audit trail.
    """
    scaled = []
    for shot in window.shots:
        multiplier = factor_multiplier(bounds_fn(shot.delta.date), params, m_dist)
        value = shot.delta.value * multiplier
        scaled.append(
            ScaledShotValue(
                date=shot.delta.date,
                raw=shot.delta.value,
                multiplier=multiplier,
                scaled=value,
                displayed=round_half_away_from_zero(value),
            )
        )
    return scaled


def rescale_score(total: float, m_f_d: float) -> float:
    """Map a total score back into truncated-index-point units: total / m_f_d."""
    if m_f_d <= 0:
        raise NonpositiveMultiplier(f"multiplier must be positive, got {m_f_d}")
    return total / m_f_d
