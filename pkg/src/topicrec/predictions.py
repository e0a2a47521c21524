"""Ranked prediction sets and their delimited wire format.

The file format (one ``record_id<TAB>label:prob,label:prob,...`` line per
record, probabilities with 6 decimals, ranked order) is shared by the
inference path and the fusion combiner, which ingests external rankers'
files in the same shape.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class PredictionSet:
    """Ranked (label, probability) pairs, non-increasing in probability,
    at most k entries, every probability >= tau."""

    ranked: tuple[tuple[object, float], ...]
    k: int
    tau: float = 0.0

    def labels(self) -> list:
        return [lab for lab, _ in self.ranked]

    def head(self, k: int) -> "PredictionSet":
        """The top-k prefix (the ranked list is already sorted)."""
        return PredictionSet(self.ranked[:k], k, self.tau)


def write_predictions(
    path, preds: dict[str, PredictionSet], labels: Sequence[str] | None = None
) -> None:
    """When ``labels`` is given, integer label ids are rendered as the
    corresponding label strings."""
    with open(path, "w", encoding="utf-8") as fh:
        for rid, ps in preds.items():
            cells = []
            for lab, pr in ps.ranked:
                if labels is not None and isinstance(lab, (int, np.integer)):
                    lab = labels[lab]
                cells.append(f"{lab}:{pr:.6f}")
            fh.write(f"{rid}\t{','.join(cells)}\n")


def read_predictions(path) -> dict[str, PredictionSet]:
    """Parse prediction lines back into label-string rankings."""
    out: dict[str, PredictionSet] = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}: line {n}: expected 'record_id<TAB>predictions'")
            rid, body = parts
            if rid in out:
                raise DataError(f"{path}: line {n}: duplicate record id {rid!r}")
            ranked = []
            if body:
                for cell in body.split(","):
                    if ":" not in cell:
                        raise DataError(f"{path}: line {n}: expected 'label:prob' cells")
                    lab, pr = cell.rsplit(":", 1)
                    try:
                        ranked.append((lab, float(pr)))
                    except ValueError as exc:
                        raise DataError(f"{path}: line {n}: bad probability {pr!r}") from exc
            out[rid] = PredictionSet(tuple(ranked), k=len(ranked))
    return out
