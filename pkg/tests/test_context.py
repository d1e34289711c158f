from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from factorcast.context import build_shot_window, price_delta, truncate
from factorcast.errors import MissingFactors, OutOfRange
from factorcast.factors import FactorSet

from .conftest import make_series, make_tracking_series


def factor_set(d, trial=0):
    return FactorSet(date=d, trial_index=trial, factors=tuple(f"factor {i}" for i in range(1, 11)))


class TestTruncate:
    @pytest.mark.parametrize(
        "x,expected",
        [(3.9, 3), (-3.9, -3), (5.0, 5), (0.0, 0), (-0.2, 0), (0.99, 0)],
    )
    def test_toward_zero(self, x, expected):
        assert truncate(x) == expected

    def test_floor_mode(self):
        assert truncate(-3.9, mode="floor") == -4
        assert truncate(3.9, mode="floor") == 3

    def test_non_finite(self):
        with pytest.raises(ValueError):
            truncate(float("inf"))

    @given(st.floats(min_value=-1e9, max_value=1e9, allow_nan=False))
    def test_magnitude_and_sign(self, x):
        t = truncate(x)
        assert abs(t) <= abs(x)
        assert t == 0 or (t > 0) == (x > 0)


class TestPriceDelta:
    def test_lookback_one(self):
        series = make_series([100.0, 103.4, 101.1, 105.9])
        d = series.date_at(2)
        assert price_delta(series, d, 1).value == truncate(105.9 - 103.4)
        assert price_delta(series, d, 1).value == 2

    def test_lookback_zero(self):
        series = make_series([100.0, 103.4, 101.1, 105.9])
        d = series.date_at(2)
        assert price_delta(series, d, 0).value == 4

    def test_last_position_has_no_tomorrow(self):
        series = make_series([100.0, 103.4, 101.1, 105.9])
        with pytest.raises(OutOfRange):
            price_delta(series, series.date_at(3), 0)

    def test_lookback_beyond_start(self):
        series = make_series([100.0, 103.4, 101.1])
        with pytest.raises(OutOfRange):
            price_delta(series, series.date_at(1), 2)


class TestBuildShotWindow:
    def build(self, n=40, l=1, d_pos=30, missing=None):
        series = make_series([100.0 + i for i in range(n)])
        factors = {d: factor_set(d) for d in series.dates}
        if missing is not None:
            del factors[series.date_at(missing)]
        return series, build_shot_window(series, factors, series.date_at(d_pos), l)

    def test_ordering_most_recent_first(self):
        series, window = self.build()
        dates = [shot.delta.date for shot in window.shots]
        assert dates == [series.date_at(30 - j) for j in range(1, 6)]

    def test_leakage_bound(self):
        series = make_tracking_series([100.0 + i for i in range(40)])
        factors = {d: factor_set(d) for d in series.dates}
        build_shot_window(series, factors, series.date_at(30), 1)
        assert max(series.reads) <= 30

    def test_missing_factors(self):
        series = make_series([100.0 + i for i in range(40)])
        factors = {d: factor_set(d) for d in series.dates}
        del factors[series.date_at(27)]  # d-3 for d at 30
        with pytest.raises(MissingFactors):
            build_shot_window(series, factors, series.date_at(30), 1)

    def test_too_early(self):
        series = make_series([100.0 + i for i in range(40)])
        factors = {d: factor_set(d) for d in series.dates}
        with pytest.raises(OutOfRange):
            build_shot_window(series, factors, series.date_at(4), 1)

    def test_consecutive_windows_share_four_shots(self):
        series = make_series([100.0 + (i % 7) for i in range(40)])
        factors = {d: factor_set(d) for d in series.dates}
        w1 = build_shot_window(series, factors, series.date_at(30), 1)
        w2 = build_shot_window(series, factors, series.date_at(31), 1)
        shared = set(s.delta.date for s in w1.shots) & set(s.delta.date for s in w2.shots)
        assert len(shared) == 4

    @given(
        d_pos=st.integers(min_value=9, max_value=38),
        l=st.integers(min_value=0, max_value=3),
    )
    def test_never_reads_past_question_date(self, d_pos, l):
        series = make_tracking_series([100.0 + (i * 13 % 11) for i in range(40)])
        factors = {d: factor_set(d) for d in series.dates}
        try:
            build_shot_window(series, factors, series.date_at(d_pos), l)
        except OutOfRange:
            return
        assert max(series.reads) <= d_pos
