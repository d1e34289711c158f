"""Key-factor extraction: turn a day's combined reports into 10 concise factors."""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date as Date
from importlib import resources

from .corpus import ReportDoc
from .errors import DuplicateLabel, EmptyInput, ExtractionFailed, NoFactorsFound
from .gateway import BackendConfig, GenRequest, generate

FACTOR_COUNT = 10
MAX_FACTOR_CHARS = 500
EXTRACTION_RETRIES = 2

EXTRACTION_SYSTEM_TEXT = (
    "You are a financial analyst; list exactly 10 key factors likely to "
    "influence the market, one line each, numbered 1-10, each under 30 words."
)

_RETRY_NOTE = (
    "\n\nYour previous reply was not a valid list of exactly 10 numbered "
    "factors. Reply again with exactly 10 lines, numbered 1-10. "
    "(attempt {attempt})"
)


def default_extraction_template() -> str:
    return resources.files("factorcast").joinpath("prompts/extract_factors.txt").read_text(encoding="utf-8")


@dataclass(frozen=True)
class FactorSet:
    """Exactly 10 nonempty factor texts for one date and trial."""

    date: Date
    trial_index: int
    factors: tuple[str, ...]

    def __post_init__(self):
        if len(self.factors) != FACTOR_COUNT:
            raise ValueError(f"expected {FACTOR_COUNT} factors, got {len(self.factors)}")
        for i, text in enumerate(self.factors, start=1):
            if not text.strip():
                raise ValueError(f"factor {i} is empty")
            if len(text.strip()) > MAX_FACTOR_CHARS:
                raise ValueError(f"factor {i} exceeds {MAX_FACTOR_CHARS} characters")


def combine_reports(docs: list[ReportDoc]) -> str:
    """Concatenate `title\\nbody` blocks separated by blank lines, in order."""
    if not docs:
        raise EmptyInput("no report documents to combine")
    return "\n\n".join(f"{doc.title}\n{doc.body}" for doc in docs)


_FACTOR_LINE = re.compile(r"^\s*(\d{1,2})[.)]\s+(.+)$")


def parse_factor_list(text: str) -> list[str]:
    """Extract numbered lines `N. text` / `N) text`, ordered by their label.

    Lines that do not look like list entries are ignored; a repeated label
    is an error.
    """
    found: dict[int, str] = {}
    for line in text.splitlines():
        match = _FACTOR_LINE.match(line)
        if not match:
            continue
        label = int(match.group(1))
        if label in found:
            raise DuplicateLabel(f"factor label {label} appears more than once")
        found[label] = match.group(2).strip()
    if not found:
        raise NoFactorsFound("no numbered factor lines in output")
    return [found[label] for label in sorted(found)]


def render_factor_list(factors: list[str] | tuple[str, ...]) -> str:
    return "\n".join(f"{i}. {text}" for i, text in enumerate(factors, start=1))


def build_extraction_request(
    combined: str,
    trial_index: int,
    *,
    temperature: float,
    max_tokens: int,
    attempt: int = 0,
    template: str | None = None,
) -> GenRequest:
    """Pure request construction, exposed so tests can precompute digests.

    Retry attempts append a correction note: a byte-identical request would
    just replay the cached bad response, so each attempt must digest
    differently.
    """
    template = template if template is not None else default_extraction_template()
    user_text = template.replace("{REPORTS}", combined)
    if attempt > 0:
        user_text += _RETRY_NOTE.format(attempt=attempt + 1)
    return GenRequest(
        system_text=EXTRACTION_SYSTEM_TEXT,
        user_text=user_text,
        temperature=temperature,
        max_tokens=max_tokens,
        trial_index=trial_index,
    )


def extract_factors(
    cfg: BackendConfig,
    d: Date,
    combined: str,
    trial_index: int,
    *,
    temperature: float = 0.2,
    max_tokens: int = 1024,
    strict_mode: bool = True,
    template: str | None = None,
) -> FactorSet:
    """Prompt the backend for 10 factors and parse the numbered list.

    Malformed output (unparseable, or a count other than 10) is retried up
    to EXTRACTION_RETRIES times with a correction note. strict_mode rejects
    over-long lists; otherwise the first 10 labels are kept.

    Raises:
        EmptyInput: combined report text is empty.
        ExtractionFailed: no attempt yielded a valid factor set.
    """
    if not combined:
        raise EmptyInput(f"no report text for {d}")
    failures: list[str] = []
    for attempt in range(EXTRACTION_RETRIES + 1):
        req = build_extraction_request(
            combined,
            trial_index,
            temperature=temperature,
            max_tokens=max_tokens,
            attempt=attempt,
            template=template,
        )
        result = generate(cfg, req)
        try:
            factors = parse_factor_list(result.text)
        except (NoFactorsFound, DuplicateLabel) as exc:
            failures.append(f"attempt {attempt + 1}: {exc}")
            continue
        if len(factors) > FACTOR_COUNT and not strict_mode:
            factors = factors[:FACTOR_COUNT]
        if len(factors) != FACTOR_COUNT:
            failures.append(f"attempt {attempt + 1}: got {len(factors)} factors")
            continue
        try:
            return FactorSet(date=d, trial_index=trial_index, factors=tuple(f.strip() for f in factors))
        except ValueError as exc:
            failures.append(f"attempt {attempt + 1}: {exc}")
    raise ExtractionFailed(f"extraction for {d} trial {trial_index} failed: " + "; ".join(failures))
