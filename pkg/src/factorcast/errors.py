"""Exception hierarchy for the factorcast pipeline.

Every operation-level failure raises a named subclass of FactorcastError so
callers (and the CLI) can distinguish data problems from backend problems
without string matching.
"""

from __future__ import annotations


class FactorcastError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(FactorcastError):
    """Run configuration is missing, malformed, or inconsistent."""


# --- corpus ---------------------------------------------------------------

class MalformedRow(FactorcastError):
    """A price-file row has an unparseable date or close."""


class NonMonotonicDates(FactorcastError):
    """Price dates are out of order or duplicated."""


class EmptySeries(FactorcastError):
    """Price file contains no data rows."""


class MalformedRecord(FactorcastError):
    """A report record is not a valid JSON object."""


class MissingField(FactorcastError):
    """A report record lacks a required field."""


class NoReportsForDate(FactorcastError):
    """No report documents exist for the requested date."""


class OutOfRange(FactorcastError):
    """A trading-day position falls outside the loaded series."""


# --- gateway --------------------------------------------------------------

class BackendUnreachable(FactorcastError):
    """The generation backend could not be reached (or offline mode blocked it)."""


class AuthMissing(FactorcastError):
    """The API key environment variable is unset or empty."""


class EmptyResponse(FactorcastError):
    """The backend returned an empty completion."""


class FixtureMiss(FactorcastError):
    """The mock backend has no scripted response for the request digest."""


# --- factor extraction ----------------------------------------------------

class EmptyInput(FactorcastError):
    """Report combination was asked for zero documents."""


class NoFactorsFound(FactorcastError):
    """Backend output contains no numbered factor lines."""


class DuplicateLabel(FactorcastError):
    """Backend output repeats a factor number."""


class ExtractionFailed(FactorcastError):
    """Factor extraction kept producing invalid output after all retries."""


# --- context --------------------------------------------------------------

class MissingFactors(FactorcastError):
    """A shot date has no extracted factor set."""


# --- scaling --------------------------------------------------------------

class DomainError(FactorcastError):
    """Numeric argument outside the mathematical domain (e.g. p not in (0,1))."""


class InsufficientHistory(FactorcastError):
    """Not enough past deltas to fill the rolling window."""


class NonpositiveMultiplier(FactorcastError):
    """Rescaling requires a strictly positive multiplier."""


# --- scoring --------------------------------------------------------------

class MalformedScoreLine(FactorcastError):
    """A factor-score line does not match the required output format."""


class ScoreOutOfRange(FactorcastError):
    """A parsed score falls outside the allowed Likert range."""


class MissingFactorIndex(FactorcastError):
    """The scored output skips one or more factor indices."""


class DuplicateFactorIndex(FactorcastError):
    """The scored output repeats a factor index."""


class TrialFailed(FactorcastError):
    """A scoring trial could not produce a valid result after retries."""


# --- consistency ----------------------------------------------------------

class EmptyDocument(FactorcastError):
    """A document has no tokens to vectorize."""


class ZeroVector(FactorcastError):
    """Cosine similarity is undefined for an all-zero vector."""


class InsufficientTrials(FactorcastError):
    """Fewer than two trials per date; nothing to compare."""


class ConstantSeries(FactorcastError):
    """Pearson correlation is undefined for a constant series."""


class LengthMismatch(FactorcastError):
    """Paired series have different lengths."""


class MissingTrialArtifacts(FactorcastError):
    """No per-trial audit files found for the consistency study."""


# --- evaluation -----------------------------------------------------------

class Empty(FactorcastError):
    """Metric requested over zero samples."""


class SingularDesign(FactorcastError):
    """The autoregression design matrix is rank-deficient."""


class TooShort(FactorcastError):
    """Series too short to fit or forecast the requested model."""


class MisalignedDates(FactorcastError):
    """Models being compared do not cover the same evaluation dates."""
