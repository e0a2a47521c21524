"""Probabilities, ranked top-k recommendations, the low-confidence filter,
and validation-set threshold tuning."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .corpus import Corpus
from .errors import DataError
from .evaluate import micro_metrics
from .featurize import SparseVec
from .losses import sigmoid
from .predictions import PredictionSet
from .trainer import Model, forward

DEFAULT_KS = (1, 3, 5)
DEFAULT_GRID_STEP = 0.01

_P_LO = 1e-15
_P_HI = 1.0 - 1e-15


def predict_proba(model: Model, x: SparseVec) -> np.ndarray:
    """Per-class sigmoid probabilities, clamped to the open interval (0,1)."""
    return np.clip(sigmoid(forward(model, x)), _P_LO, _P_HI)


def top_k(p: np.ndarray, k: int) -> list[int]:
    """Label ids sorted by probability descending, ties by ascending id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    p = np.asarray(p)
    order = np.lexsort((np.arange(p.size), -p))
    return [int(i) for i in order[: min(k, p.size)]]


def rank_predictions(p: np.ndarray, k: int) -> PredictionSet:
    return PredictionSet(tuple((i, float(p[i])) for i in top_k(p, k)), k)


def filter_low_confidence(preds: PredictionSet, tau: float) -> PredictionSet:
    """Keep only predictions with probability >= tau (may become empty)."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0,1], got {tau}")
    kept = tuple((lab, pr) for lab, pr in preds.ranked if pr >= tau)
    return PredictionSet(kept, preds.k, tau)


def threshold_grid(grid_step: float) -> list[float]:
    if not 0.0 < grid_step <= 0.5:
        raise ValueError(f"grid_step must be in (0, 0.5], got {grid_step}")
    taus = [round(i * grid_step, 12) for i in range(int(np.floor(1.0 / grid_step)) + 1)]
    if taus[-1] < 1.0:
        taus.append(1.0)
    return taus


def tune_threshold(
    model: Model,
    val_corpus: Corpus,
    feats: Sequence[SparseVec],
    ks: Sequence[int] = DEFAULT_KS,
    grid_step: float = DEFAULT_GRID_STEP,
) -> float:
    """Sweep tau over {0, grid_step, ..., 1} and return the value that
    maximizes the mean micro-F1 over the requested cutoffs on the
    validation corpus; ties go to the smallest tau."""
    if not val_corpus.records:
        raise DataError("validation corpus is empty")
    if len(feats) != len(val_corpus.records):
        raise ValueError("feature list must align with validation records")
    ks = sorted(set(ks))
    max_k = max(ks)
    base = {
        rec.id: rank_predictions(predict_proba(model, feats[i]), max_k)
        for i, rec in enumerate(val_corpus.records)
    }
    truth = {rec.id: rec.topics for rec in val_corpus.records}

    best_tau, best_obj = 0.0, -1.0
    for tau in threshold_grid(grid_step):
        obj = 0.0
        for k in ks:
            preds = {rid: filter_low_confidence(ps.head(k), tau) for rid, ps in base.items()}
            obj += micro_metrics(preds, truth)[2]
        obj /= len(ks)
        if obj > best_obj:
            best_tau, best_obj = tau, obj
    return best_tau
