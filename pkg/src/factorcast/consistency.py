"""Trial-consistency study: TF-IDF similarity of factor texts, score correlations.

Answers "how much do repeated trials at low temperature agree?" two ways:
pairwise cosine similarity of each date's factor texts across trials, and
pairwise Pearson correlation of per-trial total-score series over the
whole period.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    ConstantSeries,
    EmptyDocument,
    InsufficientTrials,
    LengthMismatch,
    ZeroVector,
)

# Maximal runs of letters/digits, Unicode-aware (Korean syllable runs come
# out as single tokens); underscores are not word characters here.
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return [match.group(0).lower() for match in _TOKEN.finditer(text)]


def tfidf_vectors(docs: Sequence[str]) -> list[dict[str, float]]:
    """Per-document term -> tf*idf maps over the given corpus.

    tf is the raw in-document count; idf = ln((1+N)/(1+df)) + 1 where N is
    the corpus size and df the number of docs containing the term.
    """
    token_lists = [tokenize(doc) for doc in docs]
    for i, tokens in enumerate(token_lists):
        if not tokens:
            raise EmptyDocument(f"document {i} has no tokens")
    n_docs = len(docs)
    doc_freq: dict[str, int] = {}
    for tokens in token_lists:
        for term in set(tokens):
            doc_freq[term] = doc_freq.get(term, 0) + 1
    idf = {term: math.log((1 + n_docs) / (1 + df)) + 1.0 for term, df in doc_freq.items()}
    vectors = []
    for tokens in token_lists:
        counts: dict[str, int] = {}
        for term in tokens:
            counts[term] = counts.get(term, 0) + 1
        vectors.append({term: count * idf[term] for term, count in counts.items()})
    return vectors


def cosine_similarity(a: dict[str, float], b: dict[str, float]) -> float:
    norm_a = math.sqrt(sum(v * v for v in a.values()))
    norm_b = math.sqrt(sum(v * v for v in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity of a zero vector")
    smaller, larger = (a, b) if len(a) <= len(b) else (b, a)
    dot = sum(v * larger[t] for t, v in smaller.items() if t in larger)
    return dot / (norm_a * norm_b)


@dataclass(frozen=True)
class SimilarityStats:
    method: str
    mean: float
    std: float
    n_pairs: int


def trial_similarity_stats(
    trials_by_date: dict[object, list[str]],
    method: str = "tfidf",
    std_mode: str = "population",
) -> SimilarityStats:
    """Mean/std of pairwise trial similarities, pooled over all dates.

    `trials_by_date` maps each date to that date's per-trial documents (a
    trial's 10 factors joined by newlines). For each date the TF-IDF corpus
    is that date's trials; every unordered pair contributes one similarity.
    """
    if method != "tfidf":
        raise ValueError(f"unsupported similarity method {method!r}")
    sims: list[float] = []
    for d in sorted(trials_by_date, key=str):
        docs = trials_by_date[d]
        if len(docs) < 2:
            continue
        vectors = tfidf_vectors(docs)
        for i in range(len(vectors)):
            for j in range(i + 1, len(vectors)):
                sims.append(cosine_similarity(vectors[i], vectors[j]))
    if not sims:
        raise InsufficientTrials("need at least one date with two or more trials")
    mean = sum(sims) / len(sims)
    variance = sum((s - mean) ** 2 for s in sims)
    if std_mode == "population":
        variance /= len(sims)
    elif std_mode == "sample":
        variance /= max(len(sims) - 1, 1)
    else:
        raise ValueError(f"unknown std_mode {std_mode!r}")
    return SimilarityStats(method=method, mean=mean, std=math.sqrt(variance), n_pairs=len(sims))


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    """Sample Pearson correlation of two equal-length, nonconstant series."""
    if len(a) != len(b):
        raise LengthMismatch(f"series lengths differ: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise LengthMismatch("need at least 2 points")
    mean_a = sum(a) / len(a)
    mean_b = sum(b) / len(b)
    dev_a = [x - mean_a for x in a]
    dev_b = [x - mean_b for x in b]
    var_a = sum(x * x for x in dev_a)
    var_b = sum(x * x for x in dev_b)
    if var_a == 0.0 or var_b == 0.0:
        raise ConstantSeries("correlation undefined for a constant series")
    return sum(x * y for x, y in zip(dev_a, dev_b)) / math.sqrt(var_a * var_b)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric k x k Pearson matrix with a unit diagonal."""

    values: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        k = len(self.values)
        for row in self.values:
            if len(row) != k:
                raise ValueError("matrix is not square")
        for i in range(k):
            if self.values[i][i] != 1.0:
                raise ValueError("diagonal must be 1")
            for j in range(k):
                if self.values[i][j] != self.values[j][i]:
                    raise ValueError("matrix must be symmetric")
                if not -1.0 - 1e-12 <= self.values[i][j] <= 1.0 + 1e-12:
                    raise ValueError(f"entry ({i},{j}) outside [-1, 1]")

    @property
    def size(self) -> int:
        return len(self.values)


def trial_score_correlation(score_series: Sequence[Sequence[float]]) -> CorrelationMatrix:
    """Pairwise Pearson matrix across per-trial total-score series."""
    k = len(score_series)
    if k < 1:
        raise InsufficientTrials("no score series given")
    rows = [[1.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            r = pearson(score_series[i], score_series[j])
            rows[i][j] = rows[j][i] = r
    return CorrelationMatrix(values=tuple(tuple(row) for row in rows))
