"""Shared fixtures: synthetic series/corpus builders, mock backends, CLI runs."""

from __future__ import annotations

import json
from datetime import date as Date, timedelta
from pathlib import Path
from types import SimpleNamespace

import pytest
from click.testing import CliRunner

from factorcast.corpus import PriceSeries, ReportCorpus, ReportDoc
from factorcast.gateway import BackendConfig

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "synthetic"
GOLDEN_DIR = Path(__file__).resolve().parent / "golden"
FIXTURE_CONFIG = FIXTURE_DIR / "run_config.json"


def weekdays(start: Date, count: int) -> list[Date]:
    """`count` successive weekdays beginning at the first weekday >= start."""
    out: list[Date] = []
    d = start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def make_series(closes, start: Date = Date(2023, 6, 1)) -> PriceSeries:
    dates = weekdays(start, len(closes))
    return PriceSeries(list(zip(dates, [float(c) for c in closes])))


def make_doc(d: Date, title: str = "t", body: str = "b", views: int = 1) -> ReportDoc:
    return ReportDoc(date=d, title=title, body=body, view_count=views)


def make_corpus(docs) -> ReportCorpus:
    return ReportCorpus(list(docs))


@pytest.fixture
def mock_backend(tmp_path):
    """Factory for mock BackendConfigs with an on-disk fixture map and cache."""

    def build(fixtures: dict[str, str] | None = None, fallback: bool = True,
              model_name: str = "mock", seed: int = 42) -> BackendConfig:
        fixture_path = tmp_path / f"fixtures_{model_name}.json"
        fixture_path.write_text(json.dumps(fixtures or {}), encoding="utf-8")
        return BackendConfig(
            kind="mock",
            model_name=model_name,
            fixture_path=str(fixture_path),
            fallback=fallback,
            cache_dir=str(tmp_path / "cache"),
            seed=seed,
        )

    return build


def run_fixture_cli(root: Path) -> SimpleNamespace:
    """Cold CLI run against the bundled fixtures: backtest, consistency, forecast."""
    from factorcast.cli import main

    out, cache = root / "out", root / "cache"
    runner = CliRunner()
    base = [
        "--config", str(FIXTURE_CONFIG),
        "--output-dir", str(out),
        "--cache-dir", str(cache),
    ]
    for command in (["backtest"], ["consistency"]):
        result = runner.invoke(main, base + command)
        assert result.exit_code == 0, result.output
    forecast = runner.invoke(main, base + ["forecast", "--date", "2023-07-10", "--lookback", "1"])
    assert forecast.exit_code == 0, forecast.output
    return SimpleNamespace(out=out, cache=cache, base=base, forecast_stdout=forecast.output)


@pytest.fixture(scope="session")
def fixture_run(tmp_path_factory) -> SimpleNamespace:
    return run_fixture_cli(tmp_path_factory.mktemp("fixture_run"))


class TrackingSeries(PriceSeries):
    """PriceSeries that records every position read through close_at."""

    def __init__(self, entries):
        super().__init__(entries)
        self.reads: list[int] = []

    def close_at(self, position: int) -> float:
        self.reads.append(position)
        return super().close_at(position)


def make_tracking_series(closes, start: Date = Date(2023, 6, 1)) -> TrackingSeries:
    dates = weekdays(start, len(closes))
    return TrackingSeries(list(zip(dates, [float(c) for c in closes])))
