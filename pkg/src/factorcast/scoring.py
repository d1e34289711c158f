"""Factor scoring: the Likert scale, prompt rendering, and output parsing.

The prompt shows five historical example blocks (10 factors plus the scaled
price change that followed) and asks for one machine-parseable line per
question factor: `Factor <i>: score=<int> | rationale: <text>`.
"""

from __future__ import annotations

import re
import statistics
from dataclasses import dataclass, field
from datetime import date as Date
from importlib import resources
from typing import Sequence

from .errors import (
    DuplicateFactorIndex,
    MalformedScoreLine,
    MissingFactorIndex,
    ScoreOutOfRange,
)
from .factors import FactorSet, render_factor_list
from .scaling import ScaledShotValue

SCORING_SYSTEM_TEXT = (
    "You are a market analyst. Score how each key factor moves the market, "
    "using only the scale provided, and justify every score in one short sentence."
)

DEFAULT_LIKERT_LABELS = {
    "Moderately Decreases": -2,
    "Slightly Decreases": -1,
    "Neutral": 0,
    "Slightly Increases": 1,
    "Moderately Increases": 2,
}


def default_scoring_template() -> str:
    return resources.files("factorcast").joinpath("prompts/factor_scoring.txt").read_text(encoding="utf-8")


@dataclass(frozen=True)
class LikertScale:
    """Bijective label <-> integer map, symmetric about zero."""

    labels: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_LIKERT_LABELS))

    def __post_init__(self):
        values = sorted(self.labels.values())
        if len(set(values)) != len(values):
            raise ValueError("scale values must be distinct")
        if sorted(-v for v in values) != values:
            raise ValueError("scale values must be symmetric about zero")

    @property
    def score_max(self) -> int:
        return max(abs(v) for v in self.labels.values())

    def value_for(self, label: str) -> int | None:
        return self.labels.get(label.strip())

    def render(self) -> str:
        ordered = sorted(self.labels.items(), key=lambda item: item[1])
        return "\n".join(f"  {label} = {value:+d}" for label, value in ordered)


@dataclass(frozen=True)
class ScoredFactor:
    index: int
    score: int
    rationale: str

    def __post_init__(self):
        if not self.rationale.strip():
            raise ValueError(f"factor {self.index} has no rationale")


@dataclass(frozen=True)
class TrialResult:
    """One trial's scored factors and their total."""

    date: Date
    trial_index: int
    factors: FactorSet
    scored: tuple[ScoredFactor, ...]
    total: int
    score_max: int = 2

    def __post_init__(self):
        if self.total != sum(s.score for s in self.scored):
            raise ValueError("total is not the sum of factor scores")
        span = self.score_max * len(self.scored)
        if not -span <= self.total <= span:
            raise ValueError(f"total {self.total} outside [{-span}, {span}]")


@dataclass(frozen=True)
class ForecastRecord:
    """Median-aggregated, rescaled prediction for one (date, lookback)."""

    date: Date
    lookback: int
    trial_totals: tuple[int, ...]
    median_total: float
    multiplier: float
    prediction: float
    actual: int | None = None

    def __post_init__(self):
        if self.median_total != float(statistics.median(self.trial_totals)):
            raise ValueError("median_total is not the median of trial_totals")
        if abs(self.prediction * self.multiplier - self.median_total) > 1e-9:
            raise ValueError("prediction * multiplier does not recover median_total")


def render_prompt(
    shots: Sequence[tuple[FactorSet, ScaledShotValue]],
    question_factors: FactorSet,
    scale: LikertScale,
    template: str | None = None,
) -> str:
    """Deterministic scoring prompt from 5 example blocks and the question.

    Each example block pairs a day's 10 factors with the displayed (integer)
    scaled price change that followed.
    """
    if len(shots) != 5:
        raise ValueError(f"expected 5 shots, got {len(shots)}")
    if len(question_factors.factors) != 10:
        raise ValueError("question needs exactly 10 factors")
    template = template if template is not None else default_scoring_template()

    blocks = []
    for offset, (factor_set, scaled) in enumerate(shots, start=1):
        blocks.append(
            f"Example ({offset} trading day{'s' if offset > 1 else ''} before the question):\n"
            f"Key factors:\n{render_factor_list(factor_set.factors)}\n"
            f"Market change that followed: {scaled.displayed:+d}"
        )
    question = (
        "Question:\n"
        f"Key factors:\n{render_factor_list(question_factors.factors)}\n"
        "Market change that followed: ?"
    )
    return (
        template.replace("{SCALE}", scale.render())
        .replace("{SHOTS}", "\n\n".join(blocks))
        .replace("{QUESTION}", question)
    )


_SCORE_LINE = re.compile(
    r"^\s*Factor\s+(\d+)\s*:\s*score\s*=\s*([^|]+?)\s*\|\s*rationale\s*:\s*(.+?)\s*$"
)
_SCORE_CANDIDATE = re.compile(r"^factor\s+\d+\s*:", re.IGNORECASE)


def parse_scores(text: str, scale: LikertScale) -> list[ScoredFactor]:
    """Parse `Factor <i>: score=<int> | rationale: <text>` lines.

    Scores may also be written as scale labels ("Slightly Decreases").
    Exactly the indices 1..10 must appear, each once.

    Raises:
        MalformedScoreLine: a Factor line that does not fit the format.
        ScoreOutOfRange: integer outside the scale, or an unknown label.
        DuplicateFactorIndex / MissingFactorIndex: index bookkeeping.
    """
    found: dict[int, ScoredFactor] = {}
    for line in text.splitlines():
        stripped = line.strip()
        if not _SCORE_CANDIDATE.match(stripped):
            continue
        match = _SCORE_LINE.match(stripped)
        if not match:
            raise MalformedScoreLine(f"unparseable score line: {stripped!r}")
        index = int(match.group(1))
        raw_score, rationale = match.group(2).strip(), match.group(3)
        try:
            score = int(raw_score)
        except ValueError:
            label_value = scale.value_for(raw_score)
            if label_value is None:
                raise ScoreOutOfRange(f"factor {index}: unknown score {raw_score!r}") from None
            score = label_value
        if abs(score) > scale.score_max:
            raise ScoreOutOfRange(f"factor {index}: score {score} outside +/-{scale.score_max}")
        if index in found:
            raise DuplicateFactorIndex(f"factor index {index} scored twice")
        if not rationale.strip():
            raise MalformedScoreLine(f"factor {index}: empty rationale")
        found[index] = ScoredFactor(index=index, score=score, rationale=rationale)
    missing = [i for i in range(1, 11) if i not in found]
    if missing:
        raise MissingFactorIndex(f"missing factor indices: {missing}")
    extra = [i for i in found if not 1 <= i <= 10]
    if extra:
        raise MissingFactorIndex(f"unexpected factor indices: {sorted(extra)}")
    return [found[i] for i in range(1, 11)]


def render_scores(scored: Sequence[ScoredFactor]) -> str:
    return "\n".join(f"Factor {s.index}: score={s.score} | rationale: {s.rationale}" for s in scored)


def total_score(scored: Sequence[ScoredFactor]) -> int:
    """Sum of the 10 factor scores; bounded by construction."""
    return sum(s.score for s in scored)


def median_total(totals: Sequence[int]) -> float:
    """Statistical median; an even count averages the two middle values."""
    if not totals:
        raise ValueError("median of an empty list")
    return float(statistics.median(totals))
