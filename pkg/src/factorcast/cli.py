"""Command-line surface: forecast, backtest, consistency, eval, report.

Exit codes are a stable contract: 0 success, 1 pipeline error, 2 usage or
config error. All pipeline randomness is keyed by the config seed, and the
gateway cache makes warm reruns byte-identical.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from datetime import date as Date
from pathlib import Path

import click

from . import consistency as consistency_mod
from . import errors as E
from .config import RunConfig, load_config
from .corpus import align_to_trading_days, load_price_series, load_reports
from .evaluation import EvalSummary, evaluate_run
from .pipeline import Pipeline, consistency_study, run_baselines
from .report import render_all

logger = logging.getLogger(__name__)

_STAGES = {
    E.MalformedRow: "corpus loading",
    E.NonMonotonicDates: "corpus loading",
    E.EmptySeries: "corpus loading",
    E.MalformedRecord: "corpus loading",
    E.MissingField: "corpus loading",
    E.NoReportsForDate: "report selection",
    E.OutOfRange: "trading-day indexing",
    E.BackendUnreachable: "generation backend",
    E.AuthMissing: "generation backend",
    E.EmptyResponse: "generation backend",
    E.FixtureMiss: "generation backend",
    E.EmptyInput: "factor extraction",
    E.NoFactorsFound: "factor extraction",
    E.DuplicateLabel: "factor extraction",
    E.ExtractionFailed: "factor extraction",
    E.MissingFactors: "context assembly",
    E.DomainError: "scaling",
    E.InsufficientHistory: "scaling",
    E.NonpositiveMultiplier: "scaling",
    E.MalformedScoreLine: "score parsing",
    E.ScoreOutOfRange: "score parsing",
    E.MissingFactorIndex: "score parsing",
    E.DuplicateFactorIndex: "score parsing",
    E.TrialFailed: "scoring trials",
    E.EmptyDocument: "consistency study",
    E.ZeroVector: "consistency study",
    E.InsufficientTrials: "consistency study",
    E.ConstantSeries: "consistency study",
    E.LengthMismatch: "evaluation",
    E.MissingTrialArtifacts: "consistency study",
    E.Empty: "evaluation",
    E.SingularDesign: "baseline fitting",
    E.TooShort: "baseline fitting",
    E.MisalignedDates: "evaluation",
}


def _fail(exc: E.FactorcastError) -> None:
    stage = _STAGES.get(type(exc), "pipeline")
    raise click.ClickException(f"[{stage}] {type(exc).__name__}: {exc}")


def _load(ctx: click.Context) -> RunConfig:
    options = ctx.obj
    try:
        return load_config(
            options["config"],
            seed=options["seed"],
            offline=options["offline"],
            output_dir=options["output_dir"],
            cache_dir=options["cache_dir"],
        )
    except E.ConfigError as exc:
        raise click.UsageError(str(exc))


def build_pipeline(cfg: RunConfig) -> Pipeline:
    series = load_price_series(cfg.prices_path)
    corpus = align_to_trading_days(load_reports(cfg.reports_path), series)
    first, last = series.dates[0], series.dates[-1]
    for bound, name in ((cfg.start, "start"), (cfg.end, "end")):
        if bound is not None and not first <= bound <= last:
            raise E.ConfigError(f"{name} date {bound} outside loaded series [{first}, {last}]")
    run_dir = Path(cfg.output_dir) / "runs"
    return Pipeline(
        series=series,
        reports=corpus,
        extractor=cfg.extractor,
        scorer=cfg.scorer,
        params=cfg.scaling,
        scale=cfg.scale,
        k=cfg.k,
        temperature=cfg.temperature,
        max_tokens=cfg.max_tokens,
        top_n=cfg.top_n_reports,
        strict_mode=cfg.strict_mode,
        g_mode=cfg.g_mode,
        extract_template=cfg.template("extract_factors.txt"),
        score_template=cfg.template("factor_scoring.txt"),
        run_dir=run_dir,
        parallelism=max(cfg.extractor.parallelism, cfg.scorer.parallelism),
    )


@click.group()
@click.option("--config", "config", required=True, type=click.Path(), help="Run config JSON.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--offline", is_flag=True, help="Serve remote backends from cache only.")
@click.option("--output-dir", type=click.Path(), default=None, help="Override paths.output_dir.")
@click.option("--cache-dir", type=click.Path(), default=None, help="Override paths.cache_dir.")
@click.option("--verbose", is_flag=True, help="Log progress to stderr.")
@click.pass_context
def main(ctx, config, seed, offline, output_dir, cache_dir, verbose):
    """Turn analyst-report text into scored market forecasts and backtests."""
    if verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    ctx.obj = {
        "config": config,
        "seed": seed,
        "offline": offline,
        "output_dir": output_dir,
        "cache_dir": cache_dir,
    }


@main.command()
@click.option("--date", "date_str", required=True, help="Question date (ISO-8601).")
@click.option("--lookback", "-l", type=int, required=True, help="Look-back window l.")
@click.pass_context
def forecast(ctx, date_str, lookback):
    """Forecast one date at one look-back and print the scored factors."""
    cfg = _load(ctx)
    try:
        d = Date.fromisoformat(date_str)
    except ValueError:
        raise click.UsageError(f"bad date {date_str!r}")
    try:
        pipeline = build_pipeline(cfg)
        record = pipeline.forecast(d, lookback)
    except E.ConfigError as exc:
        raise click.UsageError(str(exc))
    except E.FactorcastError as exc:
        _fail(exc)

    click.echo(f"date: {record.date.isoformat()}")
    click.echo(f"lookback: {record.lookback}")
    click.echo(f"trial totals: {', '.join(str(t) for t in record.trial_totals)}")
    click.echo(f"median total: {_fmt(record.median_total)}")
    click.echo(f"multiplier: {_fmt(record.multiplier)}")
    click.echo(f"prediction: {_fmt(record.prediction)}")
    click.echo(f"actual: {record.actual if record.actual is not None else 'n/a'}")

    trial_doc = _median_trial_doc(pipeline.run_dir, record)
    click.echo(f"factor scores (trial {trial_doc['trial_index']}, closest to the median):")
    for item in trial_doc["scored"]:
        click.echo(f"  Factor {item['index']}: score={item['score']:+d} | rationale: {item['rationale']}")


@main.command()
@click.pass_context
def backtest(ctx):
    """Walk-forward run over the configured date range and look-back grid."""
    cfg = _load(ctx)
    try:
        pipeline = build_pipeline(cfg)
        start = cfg.start or pipeline.series.dates[0]
        end = cfg.end or pipeline.series.dates[-1]
        records, skipped = pipeline.backtest(start, end, list(cfg.l_grid))
        summary = _evaluate(cfg, pipeline, records)
    except E.ConfigError as exc:
        raise click.UsageError(str(exc))
    except E.FactorcastError as exc:
        _fail(exc)

    out = Path(cfg.output_dir)
    _write_forecasts_csv(out / "forecasts.csv", records)
    _write_summary_csv(out / "analysis" / "eval_summary.csv", summary)
    _write_run_meta(out / "run_meta.json", cfg, records, skipped)
    click.echo(f"forecasts: {len(records)} (skipped {len(skipped)})")
    click.echo(f"wrote {out / 'forecasts.csv'}")
    click.echo(f"wrote {out / 'analysis' / 'eval_summary.csv'}")


@main.command()
@click.option("--lookback", "-l", type=int, default=None,
              help="Look-back whose totals feed the correlation matrix (default: smallest).")
@click.pass_context
def consistency(ctx, lookback):
    """Trial similarity stats and the trial-correlation matrix from a finished run."""
    cfg = _load(ctx)
    l = lookback if lookback is not None else min(cfg.l_grid)
    run_dir = Path(cfg.output_dir) / "runs"
    try:
        stats, matrix = consistency_study(run_dir, l, std_mode=cfg.std_mode)
    except E.FactorcastError as exc:
        _fail(exc)

    out = Path(cfg.output_dir) / "analysis"
    out.mkdir(parents=True, exist_ok=True)
    _write_similarity_csv(out / "similarity_stats.csv", stats)
    _write_matrix_csv(out / "trial_correlation.csv", matrix)
    click.echo(f"similarity: mean={stats.mean:.6f} std={stats.std:.6f} pairs={stats.n_pairs}")
    click.echo(f"wrote {out / 'similarity_stats.csv'}")
    click.echo(f"wrote {out / 'trial_correlation.csv'}")


@main.command("eval")
@click.pass_context
def eval_cmd(ctx):
    """Recompute the metric summary from an existing forecasts.csv."""
    cfg = _load(ctx)
    forecasts_path = Path(cfg.output_dir) / "forecasts.csv"
    if not forecasts_path.exists():
        raise click.UsageError(f"no forecasts.csv under {cfg.output_dir}; run backtest first")
    try:
        pipeline = build_pipeline(cfg)
        records = _read_forecasts_csv(forecasts_path)
        summary = _evaluate(cfg, pipeline, records)
    except E.ConfigError as exc:
        raise click.UsageError(str(exc))
    except E.FactorcastError as exc:
        _fail(exc)
    _write_summary_csv(Path(cfg.output_dir) / "analysis" / "eval_summary.csv", summary)
    click.echo(f"wrote {Path(cfg.output_dir) / 'analysis' / 'eval_summary.csv'}")


@main.command()
@click.pass_context
def report(ctx):
    """Render figures from the delimited outputs of a finished run."""
    cfg = _load(ctx)
    written = render_all(Path(cfg.output_dir))
    if not written:
        raise click.UsageError(f"no analysis CSVs under {cfg.output_dir}; run backtest first")
    for path in written:
        click.echo(f"wrote {path}")


# --- shared helpers -----------------------------------------------------------

def _fmt(x: float) -> str:
    """Shortest round-trip float text; stable across platforms."""
    return repr(float(x))


def _evaluate(cfg: RunConfig, pipeline: Pipeline, records) -> EvalSummary:
    forecasts_by_l: dict[int, dict[Date, tuple[float, float]]] = {}
    for record in records:
        if record.actual is None:
            raise E.MisalignedDates(f"forecast {record.date} l={record.lookback} has no actual")
        forecasts_by_l.setdefault(record.lookback, {})[record.date] = (
            record.prediction,
            float(record.actual),
        )
    dates_by_l = {l: sorted(d) for l, d in forecasts_by_l.items()}
    baseline_preds = run_baselines(
        pipeline.series, dates_by_l, list(cfg.baseline_kinds), cfg.ar_order, cfg.g_mode
    )
    return evaluate_run(
        cfg.llm_label,
        forecasts_by_l,
        baseline_preds,
        sorted(forecasts_by_l),
        tie_mode=cfg.tie_mode,
    )


def _median_trial_doc(run_dir: Path, record) -> dict:
    trial_dir = Path(run_dir) / record.date.isoformat() / f"l{record.lookback}"
    best = None
    for path in sorted(trial_dir.glob("trial*.json")):
        doc = json.loads(path.read_text(encoding="utf-8"))
        key = (abs(doc["total"] - record.median_total), doc["trial_index"])
        if best is None or key < best[0]:
            best = (key, doc)
    if best is None:
        raise click.ClickException(f"no trial artifacts under {trial_dir}")
    return best[1]


def _write_forecasts_csv(path: Path, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["date", "lookback", "trial_totals", "median_total", "multiplier", "prediction", "actual"]
        )
        for r in records:
            writer.writerow(
                [
                    r.date.isoformat(),
                    r.lookback,
                    ";".join(str(t) for t in r.trial_totals),
                    _fmt(r.median_total),
                    _fmt(r.multiplier),
                    _fmt(r.prediction),
                    r.actual,
                ]
            )


def _read_forecasts_csv(path: Path):
    from .scoring import ForecastRecord

    records = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                ForecastRecord(
                    date=Date.fromisoformat(row["date"]),
                    lookback=int(row["lookback"]),
                    trial_totals=tuple(int(t) for t in row["trial_totals"].split(";")),
                    median_total=float(row["median_total"]),
                    multiplier=float(row["multiplier"]),
                    prediction=float(row["prediction"]),
                    actual=int(row["actual"]),
                )
            )
    return records


def _write_summary_csv(path: Path, summary: EvalSummary) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "lookback", "acc", "mcc", "rmse", "n"])
        for cell in summary.cells:
            writer.writerow(
                [cell.model, cell.lookback, f"{cell.acc:.6f}", f"{cell.mcc:.6f}", f"{cell.rmse:.6f}", cell.n]
            )


def _write_similarity_csv(path: Path, stats) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "mean", "std", "n_pairs"])
        writer.writerow([stats.method, f"{stats.mean:.6f}", f"{stats.std:.6f}", stats.n_pairs])


def _write_matrix_csv(path: Path, matrix: consistency_mod.CorrelationMatrix) -> None:
    labels = [f"trial_{i}" for i in range(matrix.size)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial"] + labels)
        for label, row in zip(labels, matrix.values):
            writer.writerow([label] + [f"{v:.6f}" for v in row])


def _write_run_meta(path: Path, cfg: RunConfig, records, skipped) -> None:
    meta = {
        "seed": cfg.seed,
        "k": cfg.k,
        "l_grid": list(cfg.l_grid),
        "llm_label": cfg.llm_label,
        "n_forecasts": len(records),
        "skipped": [list(item) for item in skipped],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
