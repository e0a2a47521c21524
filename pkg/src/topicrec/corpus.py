"""Corpus handling: cleaning, label canonicalization, ingestion, splitting,
and synthetic long-tailed corpus generation.

A corpus is an immutable list of records, each holding an opaque id, a
cleaned text (lowercase alphanumerics separated by single spaces), and a
set of integer label ids indexing into a :class:`LabelVocab`.
"""

from __future__ import annotations

import json
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

_NON_ALNUM = re.compile(r"[^a-z0-9]+")

FILLER_POOL_SIZE = 400


def clean_text(raw: str) -> str:
    """Lowercase, replace non-alphanumeric runs with a space, collapse and strip.

    Idempotent: the output alphabet is exactly [a-z0-9 ] with single
    interior spaces, which the rule maps to itself.
    """
    return _NON_ALNUM.sub(" ", raw.lower()).strip()


@dataclass(frozen=True)
class LabelVocab:
    """Ordered canonical labels (index = label id) plus an alias table."""

    labels: tuple[str, ...]
    aliases: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        index = {}
        for i, lab in enumerate(self.labels):
            if lab in index:
                raise DataError(f"duplicate label in vocabulary: {lab!r}")
            index[lab] = i
        for alias, target in self.aliases.items():
            if alias in index:
                raise DataError(f"alias {alias!r} collides with a canonical label")
            if not 0 <= target < len(self.labels):
                raise DataError(f"alias {alias!r} points to unknown label id {target}")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.labels)

    def id_of(self, label: str) -> int | None:
        return self._index.get(label)

    @classmethod
    def build(cls, labels: Iterable[str], aliases: dict[str, str] | None = None) -> "LabelVocab":
        """Construct from label strings and an alias -> canonical-string map."""
        labels = tuple(labels)
        index = {lab: i for i, lab in enumerate(labels)}
        resolved = {}
        for alias, target in (aliases or {}).items():
            if target not in index:
                raise DataError(f"alias {alias!r} maps to unknown label {target!r}")
            resolved[alias] = index[target]
        return cls(labels, resolved)

    @classmethod
    def from_files(cls, vocab_path, alias_path=None) -> "LabelVocab":
        """Read one canonical label per line, plus optional alias lines
        of the form ``alias<TAB>canonical``."""
        with open(vocab_path, encoding="utf-8") as fh:
            labels = [line.strip() for line in fh if line.strip()]
        aliases: dict[str, str] = {}
        if alias_path is not None:
            with open(alias_path, encoding="utf-8") as fh:
                for n, line in enumerate(fh, start=1):
                    line = line.rstrip("\n")
                    if not line.strip():
                        continue
                    parts = line.split("\t")
                    if len(parts) != 2:
                        raise DataError(f"{alias_path}: line {n}: expected 'alias<TAB>canonical'")
                    aliases[parts[0].strip()] = parts[1].strip()
        return cls.build(labels, aliases)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for lab in self.labels:
                fh.write(lab + "\n")


@dataclass(frozen=True)
class RepoRecord:
    """One labeled document: cleaned text plus canonical label ids."""

    id: str
    text: str
    topics: frozenset[int]


@dataclass(frozen=True)
class Corpus:
    vocab: LabelVocab
    records: tuple[RepoRecord, ...]

    def __post_init__(self):
        n = len(self.vocab)
        for rec in self.records:
            for t in rec.topics:
                if not 0 <= t < n:
                    raise DataError(f"record {rec.id!r} has out-of-vocab label id {t}")

    def __len__(self) -> int:
        return len(self.records)


def canonicalize_topics(raw: Iterable[str], vocab: LabelVocab) -> frozenset[int]:
    """Lowercase, resolve aliases, keep only vocabulary labels, deduplicate.

    Unknown topics are dropped silently; the empty set is a valid result.
    """
    out = set()
    for topic in raw:
        topic = topic.lower()
        cid = vocab.aliases.get(topic)
        if cid is None:
            cid = vocab.id_of(topic)
        if cid is not None:
            out.add(cid)
    return frozenset(out)


def ingest_jsonl(path, vocab: LabelVocab) -> Corpus:
    """Read one JSON record per line: ``{"id", "readme", "description", "topics"}``.

    readme and description are concatenated with a single space before
    cleaning. Raises :class:`DataError` naming the offending line on any
    malformed record, and on duplicate ids.
    """
    records = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                raise DataError(f"{path}: line {n}: empty line is not a record")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {n}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DataError(f"{path}: line {n}: record must be an object")
            rid = obj.get("id")
            readme = obj.get("readme")
            desc = obj.get("description")
            topics = obj.get("topics")
            if (
                not isinstance(rid, str)
                or not isinstance(readme, str)
                or not isinstance(desc, str)
                or not isinstance(topics, list)
                or not all(isinstance(t, str) for t in topics)
            ):
                raise DataError(
                    f"{path}: line {n}: record needs string 'id', 'readme', "
                    "'description' and a string array 'topics'"
                )
            if rid in seen:
                raise DataError(f"{path}: line {n}: duplicate record id {rid!r}")
            seen.add(rid)
            records.append(
                RepoRecord(
                    id=rid,
                    text=clean_text(readme + " " + desc),
                    topics=canonicalize_topics(topics, vocab),
                )
            )
    return Corpus(vocab, tuple(records))


def write_jsonl(corpus: Corpus, path) -> None:
    """Persist a corpus in the ingestion schema (re-ingesting is lossless
    because cleaning is idempotent)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in corpus.records:
            obj = {
                "id": rec.id,
                "readme": rec.text,
                "description": "",
                "topics": [corpus.vocab.labels[t] for t in sorted(rec.topics)],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def split(corpus: Corpus, sizes: tuple[int, int, int], seed: int) -> tuple[Corpus, Corpus, Corpus]:
    """Disjoint train/val/test partition by seeded uniform shuffle."""
    n_train, n_val, n_test = sizes
    if min(sizes) < 0:
        raise DataError(f"split sizes must be non-negative, got {sizes}")
    total = n_train + n_val + n_test
    if total > len(corpus.records):
        raise DataError(f"split sizes {sizes} exceed corpus size {len(corpus.records)}")
    perm = np.random.default_rng(seed).permutation(len(corpus.records))
    picked = [corpus.records[i] for i in perm[:total]]
    parts = (
        picked[:n_train],
        picked[n_train : n_train + n_val],
        picked[n_train + n_val : total],
    )
    return tuple(Corpus(corpus.vocab, tuple(p)) for p in parts)


def zipf_weights(n_classes: int, s: float) -> np.ndarray:
    """Normalized label probabilities proportional to (i+1)^(-s)."""
    w = np.arange(1, n_classes + 1, dtype=np.float64) ** (-s)
    return w / w.sum()


def generate_synthetic(
    n_classes: int,
    n_docs: int,
    zipf_s: float,
    labels_per_doc: tuple[int, int],
    seed: int,
) -> Corpus:
    """Synthesize a long-tailed labeled corpus.

    Label frequencies follow a Zipf law with exponent ``zipf_s``. Each
    document draws a label count uniformly from ``labels_per_doc``
    (inclusive), then that many distinct labels. The text carries each
    label's signature token 1-3 times plus 5-20 filler tokens, so labels
    are learnable from bag-of-words features. Deterministic per seed.
    """
    lo, hi = labels_per_doc
    if n_classes < 2:
        raise DataError(f"need at least 2 classes, got {n_classes}")
    if n_docs < 1:
        raise DataError(f"need at least 1 document, got {n_docs}")
    if zipf_s < 0:
        raise DataError(f"zipf exponent must be >= 0, got {zipf_s}")
    if not 1 <= lo <= hi:
        raise DataError(f"bad labels_per_doc range {labels_per_doc}")
    if hi > n_classes:
        raise DataError(f"labels_per_doc upper bound {hi} exceeds class count {n_classes}")

    vocab = LabelVocab(tuple(f"topic{i:03d}" for i in range(n_classes)))
    cdf = np.cumsum(zipf_weights(n_classes, zipf_s))
    rng = np.random.default_rng(seed)

    records = []
    for d in range(n_docs):
        m = int(rng.integers(lo, hi + 1))
        chosen: list[int] = []
        while len(chosen) < m:
            lab = int(np.searchsorted(cdf, rng.random(), side="right"))
            lab = min(lab, n_classes - 1)
            if lab not in chosen:
                chosen.append(lab)
        tokens: list[str] = []
        for lab in sorted(chosen):
            tokens.extend([f"sig{lab:03d}"] * int(rng.integers(1, 4)))
        n_filler = int(rng.integers(5, 21))
        tokens.extend(f"filler{j:03d}" for j in rng.integers(0, FILLER_POOL_SIZE, n_filler))
        records.append(
            RepoRecord(id=f"doc{d:05d}", text=" ".join(tokens), topics=frozenset(chosen))
        )
    return Corpus(vocab, tuple(records))


def label_counts(corpus: Corpus) -> np.ndarray:
    """Per-class positive document counts (n_i)."""
    counts = np.zeros(len(corpus.vocab), dtype=np.int64)
    for rec in corpus.records:
        for t in rec.topics:
            counts[t] += 1
    return counts


def truth_sets(corpus: Corpus) -> dict[str, frozenset[int]]:
    """Map record id -> label id set, as used by the evaluation layer."""
    return {rec.id: rec.topics for rec in corpus.records}


def label_count_map(corpus: Corpus) -> dict[str, int]:
    """Label string -> positive document count (for bucket assignment)."""
    counts = label_counts(corpus)
    return {lab: int(counts[i]) for i, lab in enumerate(corpus.vocab.labels)}
