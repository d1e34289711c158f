#!/usr/bin/env python3
"""Regenerate the bundled synthetic fixtures and, optionally, the golden files.

    python3 scripts/make_fixtures.py            # rewrite fixtures/synthetic/
    python3 scripts/make_fixtures.py --goldens  # also rerun the CLI and refresh tests/golden/

The synthetic corpus is 30 trading days (2023-06-01 .. 2023-07-12) of a
seeded random walk plus four reports per trading day and two weekend
reports (which the loader attaches to the next trading day). Everything is
derived from SEED, so the files are reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import shutil
import subprocess
import sys
import tempfile
from datetime import date as Date, timedelta
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURE_DIR = ROOT / "fixtures" / "synthetic"
GOLDEN_DIR = ROOT / "tests" / "golden"

SEED = 42
N_TRADING_DAYS = 30
START = Date(2023, 6, 1)

TOPICS = [
    "semiconductor exports", "policy rates", "battery makers", "shipbuilders",
    "won weakness", "foreign inflows", "bank earnings", "oil prices",
    "defense contracts", "retail sentiment", "auto exports", "biotech trials",
    "steel demand", "construction orders", "telecom capex", "chip inventories",
]
VERBS = ["rebound", "stall", "accelerate", "cool", "surprise", "diverge", "hold firm", "slip"]


def weekdays(start: Date, count: int) -> list[Date]:
    out, d = [], start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def write_prices(dates: list[Date], rng: random.Random) -> None:
    close = 340.0
    lines = ["date,close"]
    for d in dates:
        close = max(round(close + rng.gauss(0.0, 2.4), 2), 1.0)
        lines.append(f"{d.isoformat()},{close:.2f}")
    (FIXTURE_DIR / "prices.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def make_report(d: Date, idx: int, rng: random.Random) -> dict:
    topic = rng.choice(TOPICS)
    verb = rng.choice(VERBS)
    other = rng.choice(TOPICS)
    title = f"{topic.capitalize()} {verb}"
    body = (
        f"Analysts note that {topic} {verb} into the session of {d.isoformat()}. "
        f"Desks are watching {other} for confirmation, with positioning described as "
        f"{rng.choice(['light', 'stretched', 'mixed', 'defensive'])}. "
        f"House view {idx + 1} keeps a {rng.choice(['constructive', 'cautious', 'neutral'])} stance."
    )
    return {"date": d.isoformat(), "title": title, "body": body, "views": rng.randint(40, 5000)}


def write_reports(dates: list[Date], rng: random.Random) -> None:
    records = []
    for d in dates:
        for idx in range(4):
            records.append(make_report(d, idx, rng))
    # Two weekend notes to exercise next-trading-day attachment.
    for weekend in (Date(2023, 6, 3), Date(2023, 7, 8)):
        records.append(make_report(weekend, 0, rng))
    records.sort(key=lambda r: r["date"])
    with open(FIXTURE_DIR / "reports.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_config() -> None:
    config = {
        "paths": {
            "prices": "prices.csv",
            "reports": "reports.jsonl",
            "cache_dir": "cache",
            "output_dir": "out",
        },
        "backends": {
            "extractor": {
                "kind": "mock",
                "model_name": "mock-extractor",
                "fixture_path": "mock_fixtures.json",
                "fallback": True,
            },
            "scorer": {
                "kind": "mock",
                "model_name": "mock-scorer",
                "fixture_path": "mock_fixtures.json",
                "fallback": True,
            },
        },
        "k": 3,
        "temperature": 0.2,
        "max_tokens": 1024,
        "l_grid": [0, 1, 2],
        "scaling": {"window": 10},
        "dates": {"start": "2023-06-21", "end": "2023-07-11"},
        "seed": SEED,
        "strict_mode": True,
        "top_n_reports": 3,
        "baselines": {"kinds": ["naive", "drift", "ar"], "ar_order": 1},
        "llm_label": "mock-llm",
    }
    (FIXTURE_DIR / "run_config.json").write_text(
        json.dumps(config, indent=2) + "\n", encoding="utf-8"
    )
    (FIXTURE_DIR / "mock_fixtures.json").write_text("{}\n", encoding="utf-8")


def write_fixtures() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    dates = weekdays(START, N_TRADING_DAYS)
    write_prices(dates, random.Random(SEED))
    write_reports(dates, random.Random(SEED + 1))
    write_config()
    print(f"fixtures written to {FIXTURE_DIR}")


def tree_manifest(root: Path) -> str:
    lines = []
    for path in sorted(root.rglob("*")):
        if path.is_file():
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            lines.append(f"{digest}  {path.relative_to(root).as_posix()}")
    return "\n".join(lines) + "\n"


def run_cli(args: list[str]) -> subprocess.CompletedProcess:
    proc = subprocess.run(
        [sys.executable, "-m", "factorcast.cli", *args],
        capture_output=True,
        text=True,
        cwd=ROOT,
    )
    if proc.returncode != 0:
        sys.stderr.write(proc.stdout + proc.stderr)
        raise SystemExit(f"CLI failed: {args}")
    return proc


def write_goldens() -> None:
    config = FIXTURE_DIR / "run_config.json"
    with tempfile.TemporaryDirectory() as tmp:
        out_dir = Path(tmp) / "out"
        cache_dir = Path(tmp) / "cache"
        base = ["--config", str(config), "--output-dir", str(out_dir), "--cache-dir", str(cache_dir)]
        run_cli(base + ["backtest"])
        run_cli(base + ["consistency"])
        forecast = run_cli(base + ["forecast", "--date", "2023-07-10", "--lookback", "1"])

        if GOLDEN_DIR.exists():
            shutil.rmtree(GOLDEN_DIR)
        (GOLDEN_DIR / "backtest" / "analysis").mkdir(parents=True)
        for name in ("forecasts.csv", "run_meta.json"):
            shutil.copy2(out_dir / name, GOLDEN_DIR / "backtest" / name)
        for name in ("eval_summary.csv", "similarity_stats.csv", "trial_correlation.csv"):
            shutil.copy2(out_dir / "analysis" / name, GOLDEN_DIR / "backtest" / "analysis" / name)
        (GOLDEN_DIR / "backtest" / "output_manifest.txt").write_text(
            tree_manifest(out_dir), encoding="utf-8"
        )
        (GOLDEN_DIR / "forecast_stdout.txt").write_text(forecast.stdout, encoding="utf-8")
    print(f"goldens written to {GOLDEN_DIR}")


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--goldens", action="store_true", help="also regenerate tests/golden/")
    options = parser.parse_args()
    write_fixtures()
    if options.goldens:
        write_goldens()
