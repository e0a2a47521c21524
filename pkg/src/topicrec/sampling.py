"""Class-aware epoch scheduling and re-balanced instance weights.

Each training epoch visits every class with at least one positive example
exactly N_e times (N_e = max class count, optionally capped), drawing a
positive instance uniformly with replacement per visit. Because that
oversampling skews instance-level frequencies, each record carries
per-class weights r (class-level over instance-level expected sampling
frequency) smoothed through a shifted logistic into rhat.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, label_counts
from .errors import DataError
from .losses import sigmoid

DEFAULT_SMOOTH_ALPHA = 0.1
DEFAULT_SMOOTH_BETA = 10.0
DEFAULT_SMOOTH_MU = 0.3

NEGATIVE_WEIGHT_MODES = ("min_positive", "constant", "one")


@dataclass(frozen=True)
class LabelStats:
    """Per-class positive counts plus the per-epoch visit budget."""

    counts: np.ndarray
    n_classes: int
    n_records: int
    visits_per_class: int
    cap: int | None = None

    @classmethod
    def from_counts(cls, counts, n_records: int, cap: int | None = None) -> "LabelStats":
        counts = np.asarray(counts, dtype=np.int64)
        if np.any(counts < 0):
            raise ValueError("class counts must be non-negative")
        if cap is not None and cap < 1:
            raise ValueError(f"cap must be >= 1, got {cap}")
        visits = int(counts.max(initial=0))
        if cap is not None:
            visits = min(cap, visits)
        return cls(counts, len(counts), n_records, visits, cap)

    @classmethod
    def from_corpus(cls, corpus: Corpus, cap: int | None = None) -> "LabelStats":
        return cls.from_counts(label_counts(corpus), len(corpus.records), cap)


@dataclass(frozen=True)
class EpochPlan:
    """Shuffled (class id, record id) visit schedule for one epoch."""

    schedule: tuple[tuple[int, str], ...]
    seed: int


def epoch_plan(stats: LabelStats, corpus: Corpus, seed: int) -> EpochPlan:
    """Schedule exactly ``stats.visits_per_class`` visits for every class
    with positives, picking records uniformly with replacement, then
    shuffle the whole schedule. Deterministic per seed."""
    positives: dict[int, list[str]] = {}
    for rec in corpus.records:
        for t in rec.topics:
            positives.setdefault(t, []).append(rec.id)
    if not positives:
        raise DataError("corpus has no positive labels; nothing to schedule")
    rng = np.random.default_rng(seed)
    pairs: list[tuple[int, str]] = []
    for cls_id in sorted(positives):
        recs = positives[cls_id]
        draws = rng.integers(0, len(recs), size=stats.visits_per_class)
        pairs.extend((cls_id, recs[i]) for i in draws)
    order = rng.permutation(len(pairs))
    return EpochPlan(tuple(pairs[i] for i in order), seed)


def sampling_frequencies(stats: LabelStats, record_topics) -> tuple[np.ndarray, float]:
    """Expected class-level frequencies PC_i = 1/(C n_i) and the record's
    instance-level frequency PI = (1/C) sum over its positives of 1/n_i."""
    topics = sorted(record_topics)
    counts = stats.counts
    for t in topics:
        if counts[t] <= 0:
            raise ValueError(f"class {t} has zero positive count")
    with np.errstate(divide="ignore"):
        pc = 1.0 / (stats.n_classes * counts.astype(np.float64))
    pi = float(sum(1.0 / counts[t] for t in topics) / stats.n_classes)
    return pc, pi


def rebalance_weights(stats: LabelStats, record_topics) -> dict[int, float]:
    """r_i = PC_i / PI over the record's positive classes; the 1/C factors
    cancel, leaving (1/n_i) / sum_j (1/n_j). Sums to 1 across positives."""
    topics = sorted(record_topics)
    if not topics:
        return {}
    counts = stats.counts
    for t in topics:
        if counts[t] <= 0:
            raise ValueError(f"class {t} has zero positive count")
    inv = {t: 1.0 / counts[t] for t in topics}
    denom = sum(inv.values())
    return {t: inv[t] / denom for t in topics}


def smooth_weight(r: float, alpha: float, beta: float, mu: float) -> float:
    """Shifted logistic map alpha + sigma(beta (r - mu)); strictly
    increasing in r, bounded in (alpha, alpha + 1)."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return float(alpha + sigmoid(np.asarray(beta * (r - mu))))


@dataclass(frozen=True)
class InstanceWeights:
    """Cached per-record weights: raw r over positive classes and the full
    length-C smoothed vector rhat used by the weighted losses."""

    r: dict[str, dict[int, float]]
    rhat: dict[str, np.ndarray]
    alpha: float
    beta: float
    mu: float


def build_instance_weights(
    stats: LabelStats,
    corpus: Corpus,
    alpha: float = DEFAULT_SMOOTH_ALPHA,
    beta: float = DEFAULT_SMOOTH_BETA,
    mu: float = DEFAULT_SMOOTH_MU,
    negative_mode: str = "min_positive",
) -> InstanceWeights:
    """Compute rhat for every record once, ahead of training.

    Positive classes get smooth_weight(r_i). Negative classes are not
    covered by the weight definition, so they reuse the record's minimum
    positive smoothed weight by default; ``constant`` (alpha + 0.5) and
    ``one`` are available alternatives. Records without positives get the
    alpha + 0.5 sentinel everywhere (the scheduler never visits them).
    """
    if negative_mode not in NEGATIVE_WEIGHT_MODES:
        raise ValueError(
            f"unknown negative_mode {negative_mode!r}; expected one of {NEGATIVE_WEIGHT_MODES}"
        )
    r_all: dict[str, dict[int, float]] = {}
    rhat_all: dict[str, np.ndarray] = {}
    for rec in corpus.records:
        r = rebalance_weights(stats, rec.topics)
        r_all[rec.id] = r
        if not r:
            rhat_all[rec.id] = np.full(stats.n_classes, alpha + 0.5)
            continue
        smoothed = {t: smooth_weight(v, alpha, beta, mu) for t, v in r.items()}
        if negative_mode == "min_positive":
            neg = min(smoothed.values())
        elif negative_mode == "constant":
            neg = alpha + 0.5
        else:
            neg = 1.0
        vec = np.full(stats.n_classes, neg, dtype=np.float64)
        for t, v in smoothed.items():
            vec[t] = v
        rhat_all[rec.id] = vec
    return InstanceWeights(r_all, rhat_all, alpha, beta, mu)
