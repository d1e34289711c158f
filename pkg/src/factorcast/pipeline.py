"""End-to-end orchestration: trials, single-date forecasts, and the backtest walk.

Per trial the pipeline re-extracts factors for the question date and its
five shot dates, scales the shot deltas, renders the scoring prompt, and
parses the scored output. Trial totals are aggregated by median and mapped
back to delta units by the question date's multiplier.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

from .consistency import trial_score_correlation, trial_similarity_stats
from .context import ShotWindow, build_shot_window, price_delta
from .corpus import PriceSeries, ReportCorpus, top_reports, trading_offset
from .errors import (
    FactorcastError,
    InsufficientHistory,
    MissingFactors,
    MissingTrialArtifacts,
    NoReportsForDate,
    OutOfRange,
    TrialFailed,
)
from .evaluation import BaselineModel, baseline_forecast, fit_ar
from .factors import FactorSet, combine_reports, extract_factors
from .gateway import BackendConfig, GenRequest, generate
from .scaling import (
    RollingBounds,
    ScaledShotValue,
    ScalingParams,
    dist_multiplier,
    factor_multiplier,
    rescale_score,
    rolling_bounds,
    scale_shots,
)
from .scoring import (
    ForecastRecord,
    LikertScale,
    ScoredFactor,
    SCORING_SYSTEM_TEXT,
    TrialResult,
    median_total,
    parse_scores,
    render_prompt,
    total_score,
)

logger = logging.getLogger(__name__)

SCORING_RETRIES = 2

_SCORING_RETRY_NOTE = (
    "\n\nYour previous reply did not follow the required output format. "
    "Reply again with exactly 10 lines, one per factor, in the format "
    "`Factor <i>: score=<integer> | rationale: <text>`. (attempt {attempt})"
)


@dataclass
class Pipeline:
    """Wiring for one experiment: data, backends, scaling knobs, audit sink."""

    series: PriceSeries
    reports: ReportCorpus  # already aligned to trading days
    extractor: BackendConfig
    scorer: BackendConfig
    params: ScalingParams = field(default_factory=ScalingParams)
    scale: LikertScale = field(default_factory=LikertScale)
    k: int = 5
    temperature: float = 0.2
    max_tokens: int = 1024
    top_n: int = 3
    strict_mode: bool = True
    g_mode: str = "toward-zero"
    extract_template: str | None = None
    score_template: str | None = None
    run_dir: Path | None = None
    parallelism: int = 1

    def __post_init__(self):
        self._delta_cache: dict[int, list] = {}
        self._m_dist = dist_multiplier(self.params)

    # --- deltas and bounds ---------------------------------------------------

    def deltas(self, l: int) -> list:
        """All computable deltas for lookback l, ordered by date."""
        if l not in self._delta_cache:
            out = []
            for pos in range(l, len(self.series) - 1):
                d = self.series.date_at(pos)
                out.append(price_delta(self.series, d, l, self.g_mode))
            self._delta_cache[l] = out
        return self._delta_cache[l]

    def bounds_for(self, d: Date, l: int) -> RollingBounds:
        return rolling_bounds(self.deltas(l), d, self.params)

    def question_multiplier(self, d: Date, l: int) -> float:
        return factor_multiplier(self.bounds_for(d, l), self.params, self._m_dist)

    # --- trials ----------------------------------------------------------------

    def _factors_for(self, d: Date, trial_index: int) -> FactorSet:
        try:
            docs = top_reports(self.reports, d, self.top_n)
        except NoReportsForDate:
            raise MissingFactors(f"no reports to extract factors from for {d}") from None
        return extract_factors(
            self.extractor,
            d,
            combine_reports(docs),
            trial_index,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            strict_mode=self.strict_mode,
            template=self.extract_template,
        )

    def _score_once(self, prompt: str, trial_index: int, attempt: int) -> list[ScoredFactor]:
        user_text = prompt
        if attempt > 0:
            user_text += _SCORING_RETRY_NOTE.format(attempt=attempt + 1)
        req = GenRequest(
            system_text=SCORING_SYSTEM_TEXT,
            user_text=user_text,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            trial_index=trial_index,
        )
        result = generate(self.scorer, req)
        return parse_scores(result.text, self.scale)

    def precheck(self, d: Date, l: int) -> list[Date]:
        """Verify history suffices for (d, l) before any backend call.

        Returns the five shot dates; raises OutOfRange or
        InsufficientHistory otherwise (the latter names the needed length).
        """
        shot_dates = [trading_offset(self.series, d, -j) for j in range(1, 6)]
        for t in [d] + shot_dates:
            self.bounds_for(t, l)
        return shot_dates

    def run_trial(self, d: Date, l: int, trial_index: int) -> tuple[TrialResult, ShotWindow, list[ScaledShotValue]]:
        """One full trial: extract, window, scale, prompt, score, total."""
        shot_dates = self.precheck(d, l)
        factors_by_date: dict[Date, FactorSet] = {}
        for shot_date in [d] + shot_dates:
            factors_by_date[shot_date] = self._factors_for(shot_date, trial_index)
        window = build_shot_window(self.series, factors_by_date, d, l, self.g_mode)
        scaled = scale_shots(window, lambda t: self.bounds_for(t, l), self.params, self._m_dist)
        prompt = render_prompt(
            [(shot.factors, sv) for shot, sv in zip(window.shots, scaled)],
            factors_by_date[d],
            self.scale,
            template=self.score_template,
        )
        failures: list[str] = []
        scored: list[ScoredFactor] | None = None
        for attempt in range(SCORING_RETRIES + 1):
            try:
                scored = self._score_once(prompt, trial_index, attempt)
                break
            except FactorcastError as exc:
                failures.append(f"attempt {attempt + 1}: {exc}")
        if scored is None:
            raise TrialFailed(f"scoring for {d} trial {trial_index} failed: " + "; ".join(failures))
        trial = TrialResult(
            date=d,
            trial_index=trial_index,
            factors=factors_by_date[d],
            scored=tuple(scored),
            total=total_score(scored),
            score_max=self.scale.score_max,
        )
        return trial, window, scaled

    def run_trials(self, d: Date, l: int, k: int | None = None) -> list[TrialResult]:
        """k independent trials for one date, ordered by trial index."""
        k = self.k if k is None else k
        results = [self.run_trial(d, l, trial)[0] for trial in range(k)]
        return sorted(results, key=lambda t: t.trial_index)

    # --- forecasts ----------------------------------------------------------------

    def forecast(self, d: Date, l: int) -> ForecastRecord:
        """Full pipeline for one (date, lookback); writes the audit bundle."""
        trials: list[TrialResult] = []
        windows: list[ShotWindow] = []
        scaled_all: list[list[ScaledShotValue]] = []
        for trial_index in range(self.k):
            trial, window, scaled = self.run_trial(d, l, trial_index)
            trials.append(trial)
            windows.append(window)
            scaled_all.append(scaled)
        totals = [t.total for t in trials]
        med = median_total(totals)
        m_f_d = self.question_multiplier(d, l)
        prediction = rescale_score(med, m_f_d)
        try:
            actual = price_delta(self.series, d, l, self.g_mode).value
        except OutOfRange:
            actual = None
        record = ForecastRecord(
            date=d,
            lookback=l,
            trial_totals=tuple(totals),
            median_total=med,
            multiplier=m_f_d,
            prediction=prediction,
            actual=actual,
        )
        if self.run_dir is not None:
            self._write_audit(record, trials, windows[0], scaled_all[0], m_f_d)
        return record

    # --- audit files -----------------------------------------------------------

    def _audit_dir(self, d: Date, l: int) -> Path:
        path = Path(self.run_dir) / d.isoformat() / f"l{l}"
        path.mkdir(parents=True, exist_ok=True)
        return path

    def _write_audit(
        self,
        record: ForecastRecord,
        trials: list[TrialResult],
        window: ShotWindow,
        scaled: list[ScaledShotValue],
        m_f_d: float,
    ) -> None:
        out = self._audit_dir(record.date, record.lookback)
        shots_doc = {
            "question_date": record.date.isoformat(),
            "lookback": record.lookback,
            "shots": [
                {
                    "date": shot.delta.date.isoformat(),
                    "factors": list(shot.factors.factors),
                    "delta": shot.delta.value,
                }
                for shot in window.shots
            ],
        }
        _dump_json(out / "shots.json", shots_doc)
        scaling_doc = {
            "date": record.date.isoformat(),
            "lookback": record.lookback,
            "dist_multiplier": self._m_dist,
            "question_multiplier": m_f_d,
            "question_bounds": _bounds_doc(self.bounds_for(record.date, record.lookback)),
            "shots": [
                {
                    "date": sv.date.isoformat(),
                    "raw": sv.raw,
                    "bounds": _bounds_doc(self.bounds_for(sv.date, record.lookback)),
                    "multiplier": sv.multiplier,
                    "scaled": sv.scaled,
                    "displayed": sv.displayed,
                }
                for sv in scaled
            ],
        }
        _dump_json(out / "scaling.json", scaling_doc)
        for trial in trials:
            trial_doc = {
                "date": trial.date.isoformat(),
                "trial_index": trial.trial_index,
                "factors": list(trial.factors.factors),
                "scored": [
                    {"index": s.index, "score": s.score, "rationale": s.rationale}
                    for s in trial.scored
                ],
                "total": trial.total,
            }
            _dump_json(out / f"trial{trial.trial_index}.json", trial_doc)

    # --- backtest ------------------------------------------------------------------

    def backtest(
        self, start: Date, end: Date, l_grid: list[int]
    ) -> tuple[list[ForecastRecord], list[tuple[str, int, str]]]:
        """Walk every trading date in [start, end] for every lookback.

        Dates without enough history or reports are skipped and recorded;
        backend failures propagate. Returns (records, skipped) with records
        ordered by (lookback, date).
        """
        question_dates = [d for d in self.series.dates if start <= d <= end]
        jobs = [(l, d) for l in sorted(l_grid) for d in question_dates]
        for l in sorted(l_grid):
            self.deltas(l)  # warm the cache before any parallel walk

        def run_one(job: tuple[int, Date]):
            l, d = job
            try:
                return job, self.forecast(d, l), None
            except (InsufficientHistory, MissingFactors, NoReportsForDate, OutOfRange) as exc:
                return job, None, f"{type(exc).__name__}: {exc}"

        if self.parallelism > 1:
            with ThreadPoolExecutor(max_workers=self.parallelism) as pool:
                outcomes = list(pool.map(run_one, jobs))
        else:
            outcomes = [run_one(job) for job in jobs]

        records: list[ForecastRecord] = []
        skipped: list[tuple[str, int, str]] = []
        for (l, d), record, reason in outcomes:
            if record is not None:
                records.append(record)
            else:
                skipped.append((d.isoformat(), l, reason))
                logger.info("skipping %s l=%d: %s", d, l, reason)
        return records, skipped


# --- baselines ---------------------------------------------------------------------

def run_baselines(
    series: PriceSeries,
    dates_by_l: dict[int, list[Date]],
    kinds: list[str],
    ar_order: int = 1,
    g_mode: str = "toward-zero",
) -> dict[str, dict[int, dict[Date, float]]]:
    """Walk-forward baseline predictions on the target-delta series.

    At question date d the usable history is every delta whose computation
    needs no close past d, i.e. deltas of dates strictly before d. History
    is built incrementally from the price series as the walk advances, so
    no step ever reads a close past its own question date; AR models are
    refit at every step from that history alone.
    """
    preds: dict[str, dict[int, dict[Date, float]]] = {kind: {} for kind in kinds}
    for l, dates in dates_by_l.items():
        for kind in kinds:
            preds[kind][l] = {}
        history: list[float] = []
        next_pos = l  # earliest position whose delta can exist
        for d in sorted(dates):
            d_pos = series.position(d)
            while next_pos + 1 <= d_pos:
                t = series.date_at(next_pos)
                history.append(float(price_delta(series, t, l, g_mode).value))
                next_pos += 1
            for kind in kinds:
                if kind == "ar":
                    model = fit_ar(history, ar_order)
                else:
                    model = BaselineModel(kind=kind)
                preds[kind][l][d] = baseline_forecast(model, history)
    return preds


# --- consistency from audit artifacts -------------------------------------------------

def load_trial_artifacts(run_dir: Path, l: int) -> tuple[dict[str, list[str]], dict[int, dict[str, int]]]:
    """Read per-trial audit bundles back for the consistency study.

    Returns (factor docs per date per trial, totals[trial][date]).
    """
    run_dir = Path(run_dir)
    docs_by_date: dict[str, list[str]] = {}
    totals: dict[int, dict[str, int]] = {}
    if not run_dir.is_dir():
        raise MissingTrialArtifacts(f"run directory {run_dir} does not exist")
    for date_dir in sorted(run_dir.iterdir()):
        trial_dir = date_dir / f"l{l}"
        if not trial_dir.is_dir():
            continue
        trial_files = sorted(trial_dir.glob("trial*.json"))
        day_docs: list[tuple[int, str, int]] = []
        for path in trial_files:
            doc = json.loads(path.read_text(encoding="utf-8"))
            day_docs.append((int(doc["trial_index"]), "\n".join(doc["factors"]), int(doc["total"])))
        if not day_docs:
            continue
        day_docs.sort()
        docs_by_date[date_dir.name] = [text for _, text, _ in day_docs]
        for trial_index, _, total in day_docs:
            totals.setdefault(trial_index, {})[date_dir.name] = total
    if not docs_by_date:
        raise MissingTrialArtifacts(f"no trial artifacts under {run_dir} for lookback {l}")
    return docs_by_date, totals


def consistency_study(run_dir: Path, l: int, std_mode: str = "population"):
    """Similarity stats plus the trial-correlation matrix from audit files."""
    docs_by_date, totals = load_trial_artifacts(run_dir, l)
    stats = trial_similarity_stats(docs_by_date, method="tfidf", std_mode=std_mode)
    trial_indices = sorted(totals)
    common_dates = sorted(set.intersection(*(set(totals[t]) for t in trial_indices)))
    series = [[float(totals[t][d]) for d in common_dates] for t in trial_indices]
    matrix = trial_score_correlation(series)
    return stats, matrix


def _bounds_doc(bounds: RollingBounds) -> dict:
    return {"x_min": bounds.x_min, "x_max": bounds.x_max}


def _dump_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
