from __future__ import annotations

import math
from datetime import date as Date

import numpy as np
import pytest

from factorcast.errors import (
    Empty,
    LengthMismatch,
    MisalignedDates,
    SingularDesign,
    TooShort,
)
from factorcast.evaluation import (
    BaselineModel,
    accuracy,
    baseline_forecast,
    direction,
    evaluate_run,
    fit_ar,
    mcc,
    rmse,
)

from .conftest import weekdays
from .oracles import accuracy_loop_and_count, mcc_covariance_form, rmse_accumulator


class TestDirection:
    @pytest.mark.parametrize("x,expected", [(3.2, 1), (-0.5, -1), (0, 1), (1e-12, 1)])
    def test_values(self, x, expected):
        assert direction(x) == expected


class TestAccuracy:
    def test_two_of_three(self):
        assert accuracy([1, 2, -3], [2, -1, -1]) == pytest.approx(2 / 3)

    def test_perfect(self):
        assert accuracy([1.0, -2.0, 0.5], [3.0, -1.0, 0.2]) == 1.0

    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            preds = rng.integers(-5, 6, size=100).astype(float)
            actuals = rng.integers(-5, 6, size=100).astype(float)
            assert accuracy(preds, actuals) == accuracy_loop_and_count(preds, actuals)

    def test_plus_error_rate_is_one(self):
        preds = [1, -2, 0, 4, -1]
        actuals = [2, 2, -1, 4, -3]
        hits = accuracy(preds, actuals)
        misses = sum(
            1 for p, a in zip(preds, actuals) if direction(p) != direction(a)
        ) / len(preds)
        assert hits + misses == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            accuracy([1], [1, 2])

    def test_empty(self):
        with pytest.raises(Empty):
            accuracy([], [])

    def test_drop_ties_mode(self):
        assert accuracy([0, 2, -1], [1, 3, -4], tie_mode="drop") == 1.0


class TestMcc:
    def test_perfect_two_class(self):
        assert mcc([1, -1, 2, -2], [3, -1, 1, -5]) == pytest.approx(1.0)

    def test_hand_confusion_matrix(self):
        # pred [+,+,-,-] vs actual [+,-,-,-]: TP=1 FP=1 TN=2 FN=0.
        assert mcc([1, 1, -1, -1], [1, -1, -1, -1]) == pytest.approx(2 / math.sqrt(12), abs=1e-12)

    def test_single_class_prediction_is_zero(self):
        assert mcc([1, 2, 3, 4], [1, -1, 1, -1]) == 0.0

    def test_single_class_actuals_is_zero(self):
        assert mcc([1, -1, 1, -1], [2, 2, 2, 2]) == 0.0

    def test_matches_covariance_oracle(self):
        rng = np.random.default_rng(12)
        checked = 0
        for _ in range(100):
            preds = rng.integers(-5, 6, size=80).astype(float)
            actuals = rng.integers(-5, 6, size=80).astype(float)
            ours = mcc(preds, actuals)
            ref = mcc_covariance_form(preds, actuals)
            assert ours == pytest.approx(ref, abs=1e-12)
            checked += 1
        assert checked == 100

    def test_sign_flip_symmetry(self):
        rng = np.random.default_rng(13)
        preds = rng.integers(-5, 6, size=60).astype(float)
        actuals = rng.integers(-5, 6, size=60).astype(float)
        preds[preds == 0] = 1.0
        actuals[actuals == 0] = 1.0
        assert mcc(list(-preds), list(-actuals)) == pytest.approx(mcc(list(preds), list(actuals)), abs=1e-12)


class TestRmse:
    def test_hand_value(self):
        assert rmse([1, 2], [1, 4]) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_zero_on_equal(self):
        assert rmse([1.5, -2.0], [1.5, -2.0]) == 0.0

    def test_matches_oracle(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            preds = rng.normal(size=50)
            actuals = rng.normal(size=50)
            assert rmse(preds, actuals) == pytest.approx(rmse_accumulator(preds, actuals), abs=1e-12)

    def test_permutation_invariant_over_pairs(self):
        preds = [1.0, 5.0, -2.0]
        actuals = [0.0, 4.0, -1.0]
        order = [2, 0, 1]
        shuffled = rmse([preds[i] for i in order], [actuals[i] for i in order])
        assert shuffled == pytest.approx(rmse(preds, actuals), abs=1e-12)


class TestFitAr:
    def test_recovers_synthetic_phi(self):
        rng = np.random.default_rng(42)
        x = [0.0]
        for _ in range(499):
            x.append(0.6 * x[-1] + rng.normal(scale=1.0))
        model = fit_ar(x, 1)
        assert abs(model.coefficients[0] - 0.6) <= 0.1

    def test_white_noise_has_small_phi(self):
        rng = np.random.default_rng(43)
        x = rng.normal(size=1000)
        model = fit_ar(list(x), 1)
        assert abs(model.coefficients[0]) < 0.1

    def test_constant_series_singular(self):
        with pytest.raises(SingularDesign):
            fit_ar([3.0] * 100, 1)

    def test_too_short(self):
        with pytest.raises(TooShort):
            fit_ar([1.0, 2.0, 3.0], 1)

    def test_higher_order(self):
        rng = np.random.default_rng(44)
        x = [0.0, 0.0]
        for _ in range(998):
            x.append(0.5 * x[-1] - 0.3 * x[-2] + rng.normal())
        model = fit_ar(x, 2)
        assert abs(model.coefficients[0] - 0.5) < 0.1
        assert abs(model.coefficients[1] + 0.3) < 0.1


class TestBaselineForecast:
    def test_naive(self):
        model = BaselineModel(kind="naive")
        assert baseline_forecast(model, [3.0, 1.0, 7.0]) == 7.0

    def test_drift(self):
        model = BaselineModel(kind="drift")
        assert baseline_forecast(model, [1.0, 2.0, 3.0, 4.0]) == 5.0

    def test_ar_formula(self):
        model = BaselineModel(kind="ar", order=1, intercept=0.0, coefficients=(0.5,))
        assert baseline_forecast(model, [1.0, 8.0]) == 4.0

    def test_too_short(self):
        with pytest.raises(TooShort):
            baseline_forecast(BaselineModel(kind="drift"), [1.0])
        with pytest.raises(TooShort):
            baseline_forecast(BaselineModel(kind="naive"), [])


class TestEvaluateRun:
    def grid(self, dates, preds, actuals):
        return {0: {d: (p, a) for d, p, a in zip(dates, preds, actuals)}}

    def test_perfect_model(self):
        dates = weekdays(Date(2023, 7, 3), 4)
        actuals = [1.0, -2.0, 3.0, -1.0]
        forecasts = self.grid(dates, actuals, actuals)
        baselines = {"naive": {0: {d: 0.5 for d in dates}}}
        summary = evaluate_run("llm", forecasts, baselines, [0])
        cell = summary.cell("llm", 0)
        assert (cell.acc, cell.mcc, cell.rmse, cell.n) == (1.0, 1.0, 0.0, 4)

    def test_misaligned_baseline(self):
        dates = weekdays(Date(2023, 7, 3), 3)
        forecasts = self.grid(dates, [1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        baselines = {"naive": {0: {dates[0]: 1.0, dates[2]: 1.0}}}
        with pytest.raises(MisalignedDates):
            evaluate_run("llm", forecasts, baselines, [0])

    def test_rows_cover_every_model_and_lookback(self):
        dates = weekdays(Date(2023, 7, 3), 3)
        per_l = {d: (1.0, -1.0) for d in dates}
        forecasts = {0: per_l, 1: dict(per_l)}
        baselines = {
            "naive": {0: {d: 1.0 for d in dates}, 1: {d: 1.0 for d in dates}},
            "drift": {0: {d: -1.0 for d in dates}, 1: {d: -1.0 for d in dates}},
        }
        summary = evaluate_run("llm", forecasts, baselines, [0, 1])
        assert len(summary.cells) == 6
        assert {c.model for c in summary.cells} == {"llm", "naive", "drift"}
