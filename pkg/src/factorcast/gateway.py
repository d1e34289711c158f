"""Uniform access to text-generation backends with a deterministic response cache.

Two backends: a remote chat-completion HTTP endpoint and a local scripted
mock. Every response is cached on disk under a content-addressed digest of
the request, so reruns of a backtest replay byte-identical text and an
interrupted run resumes for free.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import requests

from .errors import (
    AuthMissing,
    BackendUnreachable,
    ConfigError,
    EmptyResponse,
    FixtureMiss,
)

logger = logging.getLogger(__name__)

RETRY_ATTEMPTS = 3
RETRY_BASE_DELAY = 1.0  # seconds, doubled per attempt


@dataclass(frozen=True)
class GenRequest:
    """One generation request; the six keyed fields define the cache digest."""

    system_text: str
    user_text: str
    temperature: float
    max_tokens: int
    trial_index: int

    def __post_init__(self):
        if not self.user_text:
            raise ValueError("user_text must be nonempty")
        if not math.isfinite(self.temperature) or not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.trial_index < 0:
            raise ValueError("trial_index must be >= 0")


@dataclass(frozen=True)
class GenResult:
    text: str
    backend_id: str
    cached: bool


@dataclass(frozen=True)
class BackendConfig:
    """Backend selection plus cache location.

    kind "remote" needs base_url + model_name (+ api_key_env set in the
    environment); kind "mock" needs fixture_path, a JSON file mapping
    request digests to response text. With fallback=True the mock
    synthesizes a valid response for unscripted digests, derived
    deterministically from the digest bytes and the seed.
    """

    kind: str
    model_name: str = "mock"
    base_url: str = ""
    api_key_env: str = ""
    fixture_path: str = ""
    fallback: bool = False
    parallelism: int = 1
    cache_dir: str = ""
    offline: bool = False
    seed: int = 42
    timeout: float = 60.0

    def __post_init__(self):
        if self.kind not in ("remote", "mock"):
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if self.kind == "remote" and not (self.base_url and self.model_name):
            raise ConfigError("remote backend needs base_url and model_name")
        if self.kind == "mock" and not self.fixture_path:
            raise ConfigError("mock backend needs fixture_path")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")


def request_digest(cfg: BackendConfig, req: GenRequest) -> str:
    """64-hex-char SHA-256 over the six keyed request fields.

    Stable across runs and platforms: the keyed fields are serialized as
    canonical JSON (sorted keys, repr-exact floats) before hashing.
    """
    keyed = {
        "model_name": cfg.model_name,
        "system_text": req.system_text,
        "user_text": req.user_text,
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
        "trial_index": req.trial_index,
    }
    material = json.dumps(keyed, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def cache_path(cache_dir: str | Path, digest: str) -> Path:
    return Path(cache_dir) / digest[:2] / f"{digest}.txt"


def _cache_read(cache_dir: str, digest: str) -> str | None:
    if not cache_dir:
        return None
    path = cache_path(cache_dir, digest)
    if not path.exists():
        return None
    return path.read_text(encoding="utf-8")


def _cache_write(cache_dir: str, digest: str, text: str) -> None:
    """Atomic write-temp-then-rename so readers never see partial entries."""
    if not cache_dir:
        return
    path = cache_path(cache_dir, digest)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(f".tmp{os.getpid()}")
    try:
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink(missing_ok=True)


def generate(cfg: BackendConfig, req: GenRequest) -> GenResult:
    """Resolve a request: cache first, then the configured backend.

    On a cache miss the response is committed atomically before returning,
    so a rerun of the same request is always a hit.

    Raises:
        AuthMissing: remote backend with the key env var unset.
        BackendUnreachable: remote transport failure after retries, or any
            uncached request in offline mode.
        EmptyResponse: backend produced empty text.
        FixtureMiss: mock backend with no scripted response and no fallback.
    """
    digest = request_digest(cfg, req)
    cached = _cache_read(cfg.cache_dir, digest)
    if cached is not None:
        return GenResult(text=cached, backend_id=cfg.model_name, cached=True)

    if cfg.kind == "mock":
        text = _mock_resolve(cfg, req, digest)
    elif cfg.offline:
        raise BackendUnreachable(f"offline mode: no cache entry for digest {digest[:12]}…")
    else:
        text = _remote_call(cfg, req)

    if not text:
        raise EmptyResponse(f"backend {cfg.model_name} returned empty text")
    _cache_write(cfg.cache_dir, digest, text)
    return GenResult(text=text, backend_id=cfg.model_name, cached=False)


# --- mock backend ----------------------------------------------------------

@lru_cache(maxsize=8)
def _load_fixture_cached(path: str, mtime_ns: int) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("mock fixture file must be a JSON object of digest -> text")
    return {str(k): str(v) for k, v in data.items()}


def _load_fixture(path: str) -> dict[str, str]:
    try:
        return _load_fixture_cached(path, os.stat(path).st_mtime_ns)
    except FileNotFoundError:
        raise ConfigError(f"mock fixture file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"mock fixture file is not valid JSON: {exc}") from None


def _mock_resolve(cfg: BackendConfig, req: GenRequest, digest: str) -> str:
    fixtures = _load_fixture(cfg.fixture_path)
    if digest in fixtures:
        return fixtures[digest]
    if not cfg.fallback:
        raise FixtureMiss(f"no scripted response for digest {digest}")
    return synthesize_response(req, digest, cfg.seed)


# Small vocabulary for synthesized factor/rationale text. Order matters:
# fallback output is a pure function of (digest, seed) and is part of the
# golden-file contract for the bundled end-to-end fixtures.
_VOCAB = (
    "exports", "rates", "earnings", "chip demand", "energy costs", "the won",
    "bond yields", "inflation", "supply chains", "retail demand", "growth",
    "margins", "bank lending", "shipping rates", "auto sales", "inventories",
    "tech capex", "defense orders", "steel prices", "biotech approvals",
    "policy support", "tariffs", "liquidity", "sentiment", "volatility",
    "credit spreads", "housing starts", "labor costs", "capex plans",
    "dividends", "buybacks", "guidance",
)

_SCORING_MARKER = "score=<integer>"
_EXTRACTION_MARKER = "numbered 1-10"


def _derived_bytes(digest: str, seed: int, salt: str) -> bytes:
    return hashlib.sha256(f"{digest}:{seed}:{salt}".encode("utf-8")).digest()


def synthesize_response(req: GenRequest, digest: str, seed: int) -> str:
    """Deterministic stand-in response derived from the digest bytes.

    Classifies the request by template markers: factor-extraction prompts
    get a numbered 10-factor list, anything else gets a valid 10-line
    scores document.
    """
    if _EXTRACTION_MARKER in req.user_text and _SCORING_MARKER not in req.user_text:
        lines = []
        for i in range(1, 11):
            b = _derived_bytes(digest, seed, f"factor:{i}")
            w1, w2, w3 = (_VOCAB[b[j] % len(_VOCAB)] for j in range(3))
            lines.append(f"{i}. Shift in {w1} with pressure from {w2} and {w3}")
        return "\n".join(lines)
    lines = []
    for i in range(1, 11):
        b = _derived_bytes(digest, seed, f"score:{i}")
        score = b[0] % 5 - 2
        w1, w2 = _VOCAB[b[1] % len(_VOCAB)], _VOCAB[b[2] % len(_VOCAB)]
        lines.append(f"Factor {i}: score={score} | rationale: {w1} points against {w2}")
    return "\n".join(lines)


# --- remote backend ---------------------------------------------------------

def _remote_call(cfg: BackendConfig, req: GenRequest) -> str:
    """Chat-completion JSON over HTTP with exponential-backoff retries."""
    if not cfg.api_key_env:
        raise AuthMissing("remote backend config names no api_key_env")
    api_key = os.environ.get(cfg.api_key_env, "")
    if not api_key:
        raise AuthMissing(f"environment variable {cfg.api_key_env} is unset or empty")

    payload = {
        "model": cfg.model_name,
        "messages": [
            {"role": "system", "content": req.system_text},
            {"role": "user", "content": req.user_text},
        ],
        "temperature": req.temperature,
        "max_tokens": req.max_tokens,
    }
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    headers = {"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"}

    last_error: Exception | None = None
    for attempt in range(RETRY_ATTEMPTS):
        if attempt:
            time.sleep(RETRY_BASE_DELAY * 2 ** (attempt - 1))
        try:
            response = requests.post(url, json=payload, headers=headers, timeout=cfg.timeout)
        except requests.RequestException as exc:
            last_error = exc
            logger.warning("attempt %d/%d against %s failed: %s", attempt + 1, RETRY_ATTEMPTS, url, exc)
            continue
        if response.status_code >= 500:
            last_error = BackendUnreachable(f"server error {response.status_code}")
            continue
        if response.status_code != 200:
            raise BackendUnreachable(f"{url} returned HTTP {response.status_code}: {response.text[:200]}")
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError, TypeError) as exc:
            raise BackendUnreachable(f"unexpected response shape from {url}: {exc}") from None
        if not content:
            raise EmptyResponse(f"backend {cfg.model_name} returned empty text")
        return content
    raise BackendUnreachable(f"{url} unreachable after {RETRY_ATTEMPTS} attempts: {last_error}")
