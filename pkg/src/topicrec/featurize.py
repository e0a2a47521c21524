"""Sparse TF-IDF features over whitespace-tokenized cleaned text."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus
from .errors import DataError

DEFAULT_MIN_DF = 2
DEFAULT_MAX_FEATURES = 20_000


@dataclass(frozen=True)
class TermVocab:
    """Retained terms (index = term id) with document frequencies and
    smoothed idf = ln((1+D)/(1+df)) + 1."""

    terms: tuple[str, ...]
    df: np.ndarray
    idf: np.ndarray
    n_docs: int
    min_df: int
    max_features: int

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class SparseVec:
    """Sparse feature vector: strictly increasing indices, positive values."""

    indices: np.ndarray
    values: np.ndarray

    @property
    def nnz(self) -> int:
        return len(self.indices)


def build_vocab(
    corpus: Corpus,
    min_df: int = DEFAULT_MIN_DF,
    max_features: int = DEFAULT_MAX_FEATURES,
) -> TermVocab:
    """Collect terms with df >= min_df; if more than max_features remain,
    keep the highest-df terms (ties broken lexicographically). Term ids are
    assigned in lexicographic order."""
    if min_df < 1:
        raise ValueError(f"min_df must be >= 1, got {min_df}")
    if not corpus.records:
        raise DataError("cannot build a term vocabulary from an empty corpus")
    df_counter: Counter[str] = Counter()
    for rec in corpus.records:
        df_counter.update(set(rec.text.split()))
    kept = [(t, c) for t, c in df_counter.items() if c >= min_df]
    if len(kept) > max_features:
        kept.sort(key=lambda tc: (-tc[1], tc[0]))
        kept = kept[:max_features]
    kept.sort(key=lambda tc: tc[0])
    terms = tuple(t for t, _ in kept)
    df = np.array([c for _, c in kept], dtype=np.int64)
    n_docs = len(corpus.records)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return TermVocab(terms, df, idf, n_docs, min_df, max_features)


def tfidf(text: str, vocab: TermVocab) -> SparseVec:
    """Raw term count times idf, l2-normalized. Out-of-vocab tokens are
    ignored; an empty or all-OOV text yields the all-zero vector."""
    index = _term_index(vocab)
    counts: Counter[int] = Counter()
    for tok in text.split():
        tid = index.get(tok)
        if tid is not None:
            counts[tid] += 1
    if not counts:
        return SparseVec(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    ids = np.array(sorted(counts), dtype=np.int64)
    vals = np.array([counts[i] for i in ids], dtype=np.float64) * vocab.idf[ids]
    vals /= np.linalg.norm(vals)
    return SparseVec(ids, vals)


def _term_index(vocab: TermVocab) -> dict[str, int]:
    cached = getattr(vocab, "_index", None)
    if cached is None:
        cached = {t: i for i, t in enumerate(vocab.terms)}
        object.__setattr__(vocab, "_index", cached)
    return cached


def serialize_term_vocab(vocab: TermVocab) -> str:
    """Text form: a header line with D and build parameters, then one
    ``term<TAB>df<TAB>idf`` line per term."""
    lines = [f"# docs={vocab.n_docs} min_df={vocab.min_df} max_features={vocab.max_features}"]
    for t, d, w in zip(vocab.terms, vocab.df, vocab.idf):
        lines.append(f"{t}\t{int(d)}\t{w:.17g}")
    return "\n".join(lines) + "\n"


def save_term_vocab(vocab: TermVocab, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_term_vocab(vocab))


def load_term_vocab(path) -> TermVocab:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise DataError(f"{path}: missing term vocabulary header")
    params = dict(kv.split("=", 1) for kv in lines[0][2:].split())
    try:
        n_docs = int(params["docs"])
        min_df = int(params["min_df"])
        max_features = int(params["max_features"])
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed term vocabulary header") from exc
    terms, dfs, idfs = [], [], []
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"{path}: line {n}: expected 'term<TAB>df<TAB>idf'")
        terms.append(parts[0])
        dfs.append(int(parts[1]))
        idfs.append(float(parts[2]))
    return TermVocab(
        tuple(terms),
        np.array(dfs, dtype=np.int64),
        np.array(idfs, dtype=np.float64),
        n_docs,
        min_df,
        max_features,
    )
