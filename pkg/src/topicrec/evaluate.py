"""Micro precision/recall/F1 at top-k, head/mid/tail bucket analysis,
the two-ranker fusion combiner, and delimited report emission.

Counts are pooled globally over every (record, label) decision: a
predicted label that the record carries is a true positive, a predicted
label it lacks is a false positive, and a carried label that was not
predicted is a false negative. Recall denominators always use the full
ground-truth sets, even when k is smaller.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence, Set
from dataclasses import dataclass, field

from .errors import DataError
from .predictions import PredictionSet

DEFAULT_HEAD_MIN = 30
DEFAULT_MID_MIN = 9

SCOPES = ("all", "head", "mid", "tail")


@dataclass(frozen=True)
class MetricCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2.0 * p * r / (p + r) if p + r else 0.0


def _labels_of(preds) -> list:
    if isinstance(preds, PredictionSet):
        return preds.labels()
    return list(preds)


def count_micro(preds: Mapping, truth: Mapping) -> MetricCounts:
    """Pool tp/fp/fn over all records; prediction and truth key sets must
    coincide."""
    if set(preds) != set(truth):
        raise DataError("prediction and truth record ids differ")
    tp = fp = fn = 0
    for rid, p in preds.items():
        predicted = set(_labels_of(p))
        actual = set(truth[rid])
        tp += len(predicted & actual)
        fp += len(predicted - actual)
        fn += len(actual - predicted)
    return MetricCounts(tp, fp, fn)


def micro_metrics(preds: Mapping, truth: Mapping) -> tuple[float, float, float]:
    c = count_micro(preds, truth)
    return c.precision, c.recall, c.f1


def f1_score(precision: float, recall: float) -> float:
    return 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0


@dataclass(frozen=True)
class BucketSpec:
    """Label partition by training frequency: head (n >= head_min),
    mid (mid_min <= n < head_min), tail (n < mid_min)."""

    head_min: int = DEFAULT_HEAD_MIN
    mid_min: int = DEFAULT_MID_MIN
    assignment: dict = field(default_factory=dict)

    def bucket_of(self, label) -> str:
        return self.assignment.get(label, "tail")

    def members(self, bucket: str) -> set:
        return {lab for lab, b in self.assignment.items() if b == bucket}


def partition_labels(train_counts, spec: BucketSpec | None = None) -> BucketSpec:
    """Fill a bucket assignment from training-set counts. ``train_counts``
    is either a label -> count mapping or a count vector indexed by id."""
    spec = spec or BucketSpec()
    if not spec.head_min > spec.mid_min >= 1:
        raise ValueError(
            f"bucket thresholds need head_min > mid_min >= 1, got {spec.head_min}, {spec.mid_min}"
        )
    if isinstance(train_counts, Mapping):
        items = train_counts.items()
    else:
        items = enumerate(train_counts)
    assignment = {}
    for lab, n in items:
        if n >= spec.head_min:
            assignment[lab] = "head"
        elif n >= spec.mid_min:
            assignment[lab] = "mid"
        else:
            assignment[lab] = "tail"
    return BucketSpec(spec.head_min, spec.mid_min, assignment)


def restrict_to_bucket(preds: Mapping, truth: Mapping, bucket: Set) -> tuple[dict, dict]:
    """Drop labels outside the bucket from every ranked list and truth set,
    preserving rank order and record keys."""
    rp = {rid: [lab for lab in _labels_of(p) if lab in bucket] for rid, p in preds.items()}
    rt = {rid: {lab for lab in labs if lab in bucket} for rid, labs in truth.items()}
    return rp, rt


def bucket_metrics(preds: Mapping, truth: Mapping, bucket: Set) -> tuple[float, float, float]:
    rp, rt = restrict_to_bucket(preds, truth, bucket)
    return micro_metrics(rp, rt)


def fuse(
    a: Mapping[str, PredictionSet],
    b: Mapping[str, PredictionSet],
    ka: int = 3,
    kb: int = 5,
) -> dict[str, PredictionSet]:
    """Per record: a's top-ka in order, then b's top-kb labels not already
    present, probabilities carried from their source lists."""
    if ka < 0 or kb < 0:
        raise ValueError("ka and kb must be non-negative")
    if set(a) != set(b):
        raise DataError("fusion inputs cover different record ids")
    out = {}
    for rid, pa in a.items():
        merged = list(pa.ranked[:ka])
        seen = {lab for lab, _ in merged}
        for lab, pr in b[rid].ranked[:kb]:
            if lab not in seen:
                merged.append((lab, pr))
                seen.add(lab)
        out[rid] = PredictionSet(tuple(merged), ka + kb)
    return out


@dataclass(frozen=True)
class ReportRow:
    scope: str
    k: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class MetricReport:
    rows: tuple[ReportRow, ...]
    avg_f1: float
    fingerprint: str
    ks: tuple[int, ...]


def build_report(
    preds: Mapping[str, PredictionSet],
    truth: Mapping,
    buckets: BucketSpec,
    ks: Sequence[int],
    fingerprint: str,
) -> MetricReport:
    """Overall and per-bucket P/R/F1 at every cutoff, plus the average of
    the overall F1 values across cutoffs."""
    ks = tuple(sorted(set(ks)))
    if not ks or not preds:
        raise DataError("nothing to report: need at least one cutoff and one record")
    members = {scope: buckets.members(scope) for scope in ("head", "mid", "tail")}
    rows = []
    overall_f1 = {}
    for scope in SCOPES:
        for k in ks:
            at_k = {rid: ps.head(k) for rid, ps in preds.items()}
            if scope == "all":
                p, r, f = micro_metrics(at_k, truth)
                overall_f1[k] = f
            else:
                p, r, f = bucket_metrics(at_k, truth, members[scope])
            rows.append(ReportRow(scope, k, p, r, f))
    avg_f1 = sum(overall_f1[k] for k in ks) / len(ks)
    return MetricReport(tuple(rows), avg_f1, fingerprint, ks)


def render_report(report: MetricReport) -> str:
    """Plain structured text, one ``scope<TAB>k<TAB>p<TAB>r<TAB>f1`` line
    per metric with 6-decimal values, then avg_f1 and fingerprint lines."""
    lines = [
        f"{row.scope}\t{row.k}\t{row.precision:.6f}\t{row.recall:.6f}\t{row.f1:.6f}"
        for row in report.rows
    ]
    lines.append(f"avg_f1\t{report.avg_f1:.6f}")
    lines.append(f"fingerprint\t{report.fingerprint}")
    return "\n".join(lines) + "\n"


def emit_report(report: MetricReport, path) -> None:
    if not report.rows:
        raise DataError("refusing to emit an empty report")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_report(report))


def parse_report(path) -> MetricReport:
    """Read a report file back (used by the figure renderer and tests)."""
    rows = []
    avg_f1 = None
    fingerprint = ""
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split("\t")
            if parts[0] == "avg_f1":
                avg_f1 = float(parts[1])
            elif parts[0] == "fingerprint":
                fingerprint = parts[1]
            elif len(parts) == 5:
                rows.append(
                    ReportRow(parts[0], int(parts[1]), float(parts[2]), float(parts[3]), float(parts[4]))
                )
            else:
                raise DataError(f"{path}: line {n}: unrecognized report line")
    if avg_f1 is None or not rows:
        raise DataError(f"{path}: incomplete report")
    ks = tuple(sorted({row.k for row in rows}))
    return MetricReport(tuple(rows), avg_f1, fingerprint, ks)
