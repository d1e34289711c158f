"""Declarative run configuration: one JSON manifest per experiment.

Relative paths resolve against the config file's directory; CLI flags
override file values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

from .errors import ConfigError
from .gateway import BackendConfig
from .scaling import ScalingParams
from .scoring import LikertScale

DEFAULT_L_GRID = (0, 1, 2)
SUPPORTED_LOOKBACKS = (0, 1, 2, 3)


@dataclass
class RunConfig:
    prices_path: Path
    reports_path: Path
    cache_dir: Path
    output_dir: Path
    extractor: BackendConfig
    scorer: BackendConfig
    k: int = 5
    temperature: float = 0.2
    max_tokens: int = 1024
    l_grid: tuple[int, ...] = DEFAULT_L_GRID
    scaling: ScalingParams = field(default_factory=ScalingParams)
    scale: LikertScale = field(default_factory=LikertScale)
    start: Date | None = None
    end: Date | None = None
    strict_mode: bool = True
    g_mode: str = "toward-zero"
    tie_mode: str = "up"
    std_mode: str = "population"
    seed: int = 42
    top_n_reports: int = 3
    baseline_kinds: tuple[str, ...] = ("naive", "drift", "ar")
    ar_order: int = 1
    llm_label: str = "llm"
    prompts_dir: Path | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not self.l_grid:
            raise ConfigError("l_grid must be nonempty")
        bad = [l for l in self.l_grid if l not in SUPPORTED_LOOKBACKS]
        if bad:
            raise ConfigError(f"unsupported lookbacks {bad}; supported: {list(SUPPORTED_LOOKBACKS)}")
        if self.start and self.end and self.start > self.end:
            raise ConfigError(f"start {self.start} after end {self.end}")

    def template(self, name: str) -> str | None:
        """Prompt template text from prompts_dir, or None for the packaged default."""
        if self.prompts_dir is None:
            return None
        path = self.prompts_dir / name
        if not path.exists():
            raise ConfigError(f"prompt template not found: {path}")
        return path.read_text(encoding="utf-8")


def _require(doc: dict, key: str, where: str) -> object:
    if key not in doc:
        raise ConfigError(f"config missing {key!r} in {where}")
    return doc[key]


def _backend_from(doc: dict, base: Path, cache_dir: Path, seed: int, offline: bool) -> BackendConfig:
    kind = str(_require(doc, "kind", "backend"))
    fixture = doc.get("fixture_path", "")
    return BackendConfig(
        kind=kind,
        model_name=str(doc.get("model_name", "mock")),
        base_url=str(doc.get("base_url", "")),
        api_key_env=str(doc.get("api_key_env", "")),
        fixture_path=str(base / fixture) if fixture else "",
        fallback=bool(doc.get("fallback", False)),
        parallelism=int(doc.get("parallelism", 1)),
        cache_dir=str(cache_dir),
        offline=offline,
        seed=seed,
    )


def load_config(
    path: str | Path,
    *,
    seed: int | None = None,
    offline: bool = False,
    output_dir: str | None = None,
    cache_dir: str | None = None,
) -> RunConfig:
    """Parse and validate a run-config JSON file.

    Keyword arguments are the CLI overrides and win over file values.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from None
    base = path.parent

    paths = _require(doc, "paths", "config")
    if not isinstance(paths, dict):
        raise ConfigError("'paths' must be an object")

    def resolve(key: str, override: str | None = None) -> Path:
        if override is not None:
            return Path(override)
        return base / str(_require(paths, key, "paths"))

    out_dir = resolve("output_dir", output_dir)
    cache = resolve("cache_dir", cache_dir)
    run_seed = int(doc.get("seed", 42)) if seed is None else seed

    backends = _require(doc, "backends", "config")
    if not isinstance(backends, dict):
        raise ConfigError("'backends' must be an object")
    extractor = _backend_from(
        dict(_require(backends, "extractor", "backends")), base, cache, run_seed, offline
    )
    scorer = _backend_from(
        dict(_require(backends, "scorer", "backends")), base, cache, run_seed, offline
    )

    try:
        scaling = ScalingParams(**doc.get("scaling", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scaling params: {exc}") from None

    labels = doc.get("likert_labels")
    try:
        scale = LikertScale(labels={str(k): int(v) for k, v in labels.items()}) if labels else LikertScale()
    except (AttributeError, ValueError) as exc:
        raise ConfigError(f"bad likert_labels: {exc}") from None
    if scale.score_max != scaling.score_max:
        raise ConfigError(
            f"scale score_max {scale.score_max} != scaling score_max {scaling.score_max}"
        )

    dates = doc.get("dates", {})
    try:
        start = Date.fromisoformat(dates["start"]) if "start" in dates else None
        end = Date.fromisoformat(dates["end"]) if "end" in dates else None
    except ValueError as exc:
        raise ConfigError(f"bad date in config: {exc}") from None

    baselines = doc.get("baselines", {})
    prompts_dir = doc.get("prompts_dir")

    try:
        return RunConfig(
            prices_path=resolve("prices"),
            reports_path=resolve("reports"),
            cache_dir=cache,
            output_dir=out_dir,
            extractor=extractor,
            scorer=scorer,
            k=int(doc.get("k", 5)),
            temperature=float(doc.get("temperature", 0.2)),
            max_tokens=int(doc.get("max_tokens", 1024)),
            l_grid=tuple(sorted(int(l) for l in doc.get("l_grid", DEFAULT_L_GRID))),
            scaling=scaling,
            scale=scale,
            start=start,
            end=end,
            strict_mode=bool(doc.get("strict_mode", True)),
            g_mode=str(doc.get("g_mode", "toward-zero")),
            tie_mode=str(doc.get("tie_mode", "up")),
            std_mode=str(doc.get("std_mode", "population")),
            seed=run_seed,
            top_n_reports=int(doc.get("top_n_reports", 3)),
            baseline_kinds=tuple(baselines.get("kinds", ("naive", "drift", "ar"))),
            ar_order=int(baselines.get("ar_order", 1)),
            llm_label=str(doc.get("llm_label", "llm")),
            prompts_dir=base / prompts_dir if prompts_dir else None,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from None
