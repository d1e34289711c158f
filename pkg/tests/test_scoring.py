from __future__ import annotations

from datetime import date as Date

import pytest
from hypothesis import given, strategies as st

from factorcast.context import PriceDelta
from factorcast.errors import (
    DuplicateFactorIndex,
    MalformedScoreLine,
    MissingFactorIndex,
    ScoreOutOfRange,
)
from factorcast.factors import FactorSet
from factorcast.scaling import ScaledShotValue, round_half_away_from_zero
from factorcast.scoring import (
    DEFAULT_LIKERT_LABELS,
    ForecastRecord,
    LikertScale,
    ScoredFactor,
    default_scoring_template,
    median_total,
    parse_scores,
    render_prompt,
    render_scores,
    total_score,
)

from .conftest import weekdays


def factor_set(d, trial=0, tag="f"):
    return FactorSet(date=d, trial_index=trial, factors=tuple(f"{tag} {i}" for i in range(1, 11)))


def make_shots(raws=(4, -1, 0, 2, -3)):
    dates = weekdays(Date(2023, 6, 1), len(raws))
    shots = []
    for d, raw in zip(dates, raws):
        scaled = float(raw) * 1.5
        sv = ScaledShotValue(
            date=d, raw=raw, multiplier=1.5, scaled=scaled,
            displayed=round_half_away_from_zero(scaled),
        )
        shots.append((factor_set(d, tag=f"shot{raw}"), sv))
    return shots


class TestLikertScale:
    def test_default_mapping(self):
        scale = LikertScale()
        assert scale.value_for("Moderately Decreases") == -2
        assert scale.value_for("Slightly Decreases") == -1
        assert scale.value_for("Neutral") == 0
        assert scale.value_for("Slightly Increases") == 1
        assert scale.value_for("Moderately Increases") == 2
        assert scale.score_max == 2

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            LikertScale(labels={"down": -2, "flat": 0, "up": 1})

    def test_duplicate_values_rejected(self):
        with pytest.raises(ValueError):
            LikertScale(labels={"a": 1, "b": 1, "c": -1, "d": -1})


class TestRenderPrompt:
    def test_deterministic(self):
        question = factor_set(Date(2023, 6, 8), tag="q")
        first = render_prompt(make_shots(), question, LikertScale())
        second = render_prompt(make_shots(), question, LikertScale())
        assert first == second

    def test_contains_all_scale_labels(self):
        text = render_prompt(make_shots(), factor_set(Date(2023, 6, 8)), LikertScale())
        for label in DEFAULT_LIKERT_LABELS:
            assert label in text

    def test_contains_shots_and_question(self):
        question = factor_set(Date(2023, 6, 8), tag="question-factor")
        text = render_prompt(make_shots(), question, LikertScale())
        assert text.count("Example (") == 5
        assert "question-factor 10" in text
        assert "Market change that followed: +6" in text  # raw 4 * 1.5 = 6
        assert "Market change that followed: ?" in text

    def test_wrong_shot_count(self):
        with pytest.raises(ValueError):
            render_prompt(make_shots()[:4], factor_set(Date(2023, 6, 8)), LikertScale())

    def test_template_placeholders(self):
        template = default_scoring_template()
        for placeholder in ("{SCALE}", "{SHOTS}", "{QUESTION}"):
            assert placeholder in template


GOOD_LINES = "\n".join(
    f"Factor {i}: score={s} | rationale: reason {i}"
    for i, s in enumerate([2, 1, 0, -1, -2, 2, 0, 1, -1, 0], start=1)
)


class TestParseScores:
    def test_well_formed(self):
        scored = parse_scores(GOOD_LINES, LikertScale())
        assert len(scored) == 10
        assert scored[0] == ScoredFactor(index=1, score=2, rationale="reason 1")

    def test_score_out_of_range(self):
        text = GOOD_LINES.replace("Factor 3: score=0", "Factor 3: score=5")
        with pytest.raises(ScoreOutOfRange):
            parse_scores(text, LikertScale())

    def test_label_form_score(self):
        text = GOOD_LINES.replace("Factor 2: score=1", "Factor 2: score=Slightly Decreases")
        scored = parse_scores(text, LikertScale())
        assert scored[1].score == -1

    def test_unknown_label(self):
        text = GOOD_LINES.replace("Factor 2: score=1", "Factor 2: score=Hugely Up")
        with pytest.raises(ScoreOutOfRange):
            parse_scores(text, LikertScale())

    def test_missing_index(self):
        text = "\n".join(GOOD_LINES.splitlines()[:9])
        with pytest.raises(MissingFactorIndex):
            parse_scores(text, LikertScale())

    def test_duplicate_index(self):
        text = GOOD_LINES + "\nFactor 1: score=0 | rationale: again"
        with pytest.raises(DuplicateFactorIndex):
            parse_scores(text, LikertScale())

    def test_malformed_line(self):
        text = GOOD_LINES.replace("Factor 4: score=-1 | rationale: reason 4", "Factor 4: -1 (no reason)")
        with pytest.raises(MalformedScoreLine):
            parse_scores(text, LikertScale())

    def test_prose_between_lines_is_ignored(self):
        text = "Here are my scores:\n" + GOOD_LINES + "\nOverall quite bullish."
        assert len(parse_scores(text, LikertScale())) == 10

    rationales = st.text(
        alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=60
    ).map(str.strip).filter(bool)

    @given(scores=st.lists(st.integers(min_value=-2, max_value=2), min_size=10, max_size=10),
           rationales=st.lists(rationales, min_size=10, max_size=10))
    def test_round_trip(self, scores, rationales):
        scored = [
            ScoredFactor(index=i, score=s, rationale=r)
            for i, (s, r) in enumerate(zip(scores, rationales), start=1)
        ]
        parsed = parse_scores(render_scores(scored), LikertScale())
        assert [(p.index, p.score) for p in parsed] == [(s.index, s.score) for s in scored]


class TestTotals:
    def test_all_max(self):
        scored = [ScoredFactor(index=i, score=2, rationale="r") for i in range(1, 11)]
        assert total_score(scored) == 20

    def test_all_zero(self):
        scored = [ScoredFactor(index=i, score=0, rationale="r") for i in range(1, 11)]
        assert total_score(scored) == 0

    def test_mixed(self):
        values = [2, 2, 1, 0, 0, -1, -1, -2, 1, 1]
        scored = [ScoredFactor(index=i, score=s, rationale="r") for i, s in enumerate(values, 1)]
        assert total_score(scored) == 3


class TestMedianTotal:
    def test_odd(self):
        assert median_total([3, -1, 7, 0, 2]) == 2

    def test_single(self):
        assert median_total([4]) == 4

    def test_even_is_midpoint_mean(self):
        assert median_total([1, 2, 3, 4]) == 2.5

    def test_empty(self):
        with pytest.raises(ValueError):
            median_total([])

    @given(st.lists(st.integers(min_value=-20, max_value=20), min_size=1, max_size=9), st.randoms())
    def test_permutation_invariant(self, totals, rng):
        shuffled = list(totals)
        rng.shuffle(shuffled)
        assert median_total(shuffled) == median_total(totals)


class TestForecastRecord:
    def test_consistency_enforced(self):
        with pytest.raises(ValueError):
            ForecastRecord(
                date=Date(2023, 7, 3), lookback=1, trial_totals=(1, 2, 9),
                median_total=5.0, multiplier=1.0, prediction=5.0,
            )

    def test_sign_of_prediction_matches_median(self):
        for totals in [(-4, -2, -6), (3, 5, 1), (0, 0, 0)]:
            med = median_total(totals)
            record = ForecastRecord(
                date=Date(2023, 7, 3), lookback=1, trial_totals=totals,
                median_total=med, multiplier=1.7, prediction=med / 1.7,
            )
            lhs = (record.prediction > 0) - (record.prediction < 0)
            rhs = (med > 0) - (med < 0)
            assert lhs == rhs
