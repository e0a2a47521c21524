"""Linear multi-label classifier trained with AdamW under a class-aware
epoch schedule.

The model is a dense C x F weight matrix plus a per-class bias; logits are
z = W x + b over sparse feature vectors. Gradients flow through the
configured loss kernel: dL/dW = grad (outer) x, dL/db = grad. Weight decay
is decoupled from the gradient (applied directly to the parameters).
"""

from __future__ import annotations

import hashlib
import struct
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, LabelVocab
from .errors import DataError, NumericalError
from .featurize import SparseVec, TermVocab, serialize_term_vocab
from .losses import LossConfig, compute_class_bias, loss_and_grad
from .sampling import InstanceWeights, LabelStats, epoch_plan

CHECKPOINT_MAGIC = b"LGN1"
_NULL_HASH = "0" * 64


@dataclass
class Model:
    weights: np.ndarray  # (C, F)
    bias: np.ndarray  # (C,)
    meta: dict[str, str] = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class OptimConfig:
    lr: float = 1e-3
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 30
    batch: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError(f"learning rate must be >= 0, got {self.lr}")
        if self.weight_decay < 0:
            raise ValueError(f"weight decay must be >= 0, got {self.weight_decay}")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie strictly in (0, 1)")
        if self.epochs < 1 or self.batch < 1:
            raise ValueError("epochs and batch size must be >= 1")


def init_model(
    n_classes: int,
    n_features: int,
    seed: int,
    bias: np.ndarray | None = None,
    zero: bool = False,
    meta: dict[str, str] | None = None,
) -> Model:
    """Seeded uniform init in [-s, s] with s = 1/sqrt(F); ``zero=True`` is
    a test hook producing all-zero logits. ``bias`` installs the class
    prior thresholds used by the bias-shifted loss families."""
    if n_classes < 1 or n_features < 1:
        raise ValueError("model dimensions must be >= 1")
    if zero:
        w = np.zeros((n_classes, n_features))
    else:
        s = 1.0 / np.sqrt(n_features)
        w = np.random.default_rng(seed).uniform(-s, s, size=(n_classes, n_features))
    b = np.zeros(n_classes) if bias is None else np.asarray(bias, dtype=np.float64).copy()
    if b.shape != (n_classes,):
        raise ValueError(f"bias must have length {n_classes}")
    return Model(w, b, dict(meta or {}))


def forward(model: Model, x: SparseVec) -> np.ndarray:
    """Exact sparse product z = W x + b."""
    return _forward(model.weights, model.bias, x)


def _forward(w: np.ndarray, b: np.ndarray, x: SparseVec) -> np.ndarray:
    if x.nnz == 0:
        return b.copy()
    if int(x.indices[-1]) >= w.shape[1]:
        raise ValueError(
            f"feature index {int(x.indices[-1])} out of range for {w.shape[1]} features"
        )
    return w[:, x.indices] @ x.values + b


def batch_gradient(
    w: np.ndarray,
    b: np.ndarray,
    items: Sequence[tuple[SparseVec, np.ndarray, np.ndarray | None]],
    loss_cfg: LossConfig,
    nu: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Mean loss and raw mean gradients over (x, y, rhat) triples."""
    gw = np.zeros_like(w)
    gb = np.zeros_like(b)
    total = 0.0
    for x, y, rhat in items:
        out = loss_and_grad(loss_cfg, _forward(w, b, x), y, rhat=rhat, nu=nu)
        total += out.loss
        gb += out.grad
        if x.nnz:
            gw[:, x.indices] += np.outer(out.grad, x.values)
    n = len(items)
    gw /= n
    gb /= n
    return gw, gb, total / n


def _adamw_step(param, grad, m, v, step: int, opt: OptimConfig) -> None:
    m *= opt.beta1
    m += (1.0 - opt.beta1) * grad
    v *= opt.beta2
    v += (1.0 - opt.beta2) * grad * grad
    mhat = m / (1.0 - opt.beta1**step)
    vhat = v / (1.0 - opt.beta2**step)
    param *= 1.0 - opt.lr * opt.weight_decay
    param -= opt.lr * mhat / (np.sqrt(vhat) + opt.eps)


def resolve_nu(loss_cfg: LossConfig, stats: LabelStats) -> np.ndarray:
    """Class bias vector for the bias-shifted families, zeros otherwise."""
    if loss_cfg.family in ("ntbce", "db"):
        if loss_cfg.nu is not None:
            return np.asarray(loss_cfg.nu, dtype=np.float64)
        return compute_class_bias(stats.counts, stats.n_records, loss_cfg.kappa)
    return np.zeros(stats.n_classes)


def train(
    model: Model,
    corpus: Corpus,
    feats: Sequence[SparseVec],
    stats: LabelStats,
    weights: InstanceWeights,
    loss_cfg: LossConfig,
    opt: OptimConfig,
    log_path=None,
) -> tuple[Model, list[float]]:
    """Run the class-aware training loop; returns a new model plus the
    per-epoch mean losses. Fully determined by (seed, config, corpus)."""
    if len(feats) != len(corpus.records):
        raise ValueError("feature list must align with corpus records")
    w = model.weights.astype(np.float64).copy()
    b = model.bias.astype(np.float64).copy()
    nu = resolve_nu(loss_cfg, stats)

    rec_index = {rec.id: i for i, rec in enumerate(corpus.records)}
    targets = np.zeros((len(corpus.records), stats.n_classes))
    for i, rec in enumerate(corpus.records):
        for t in rec.topics:
            targets[i, t] = 1.0

    m_w, v_w = np.zeros_like(w), np.zeros_like(w)
    m_b, v_b = np.zeros_like(b), np.zeros_like(b)
    step = 0
    history: list[float] = []
    for e in range(opt.epochs):
        plan = epoch_plan(stats, corpus, seed=opt.seed + e)
        total, count = 0.0, 0
        for start in range(0, len(plan.schedule), opt.batch):
            chunk = plan.schedule[start : start + opt.batch]
            items = []
            for _, rec_id in chunk:
                i = rec_index[rec_id]
                items.append((feats[i], targets[i], weights.rhat[rec_id]))
            try:
                gw, gb, mean_loss = batch_gradient(w, b, items, loss_cfg, nu)
            except ValueError as exc:
                # by this point shapes are fixed, so a kernel rejection means
                # the parameters blew up
                raise NumericalError(
                    f"non-finite values at epoch {e + 1}, batch {start // opt.batch + 1} "
                    f"(family={loss_cfg.family}, lr={opt.lr}): {exc}"
                ) from exc
            if not np.isfinite(mean_loss):
                raise NumericalError(
                    f"non-finite loss at epoch {e + 1}, batch {start // opt.batch + 1} "
                    f"(family={loss_cfg.family}, lr={opt.lr})"
                )
            step += 1
            _adamw_step(w, gw, m_w, v_w, step, opt)
            _adamw_step(b, gb, m_b, v_b, step, opt)
            total += mean_loss * len(chunk)
            count += len(chunk)
        history.append(total / count)
    if log_path is not None:
        with open(log_path, "a", encoding="utf-8") as fh:
            for e, ml in enumerate(history, start=1):
                fh.write(f"{e}\t{ml:.10f}\n")
    return Model(w, b, dict(model.meta)), history


def label_vocab_hash(vocab: LabelVocab) -> str:
    return hashlib.sha256("\n".join(vocab.labels).encode("utf-8")).hexdigest()


def term_vocab_hash(tv: TermVocab) -> str:
    return hashlib.sha256(serialize_term_vocab(tv).encode("utf-8")).hexdigest()


def config_fingerprint(config: Mapping[str, object]) -> str:
    canon = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def save_checkpoint(model: Model, path) -> None:
    """Single little-endian binary file: magic, dims, meta digests, then
    row-major weights and the bias vector."""
    c, f = model.weights.shape
    header = CHECKPOINT_MAGIC + struct.pack("<II", c, f)
    for key in ("label_vocab_hash", "term_vocab_hash", "config_fingerprint"):
        header += bytes.fromhex(model.meta.get(key, _NULL_HASH))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(model.weights.astype("<f8").tobytes(order="C"))
        fh.write(model.bias.astype("<f8").tobytes())


def load_checkpoint(
    path,
    expect_label_hash: str | None = None,
    expect_term_hash: str | None = None,
) -> Model:
    """Inverse of :func:`save_checkpoint`; verifies structure and, when
    expectations are given, the vocabulary digests."""
    with open(path, "rb") as fh:
        blob = fh.read()
    head = len(CHECKPOINT_MAGIC) + 8 + 3 * 32
    if len(blob) < head or blob[:4] != CHECKPOINT_MAGIC:
        raise DataError(f"{path}: not a model checkpoint")
    c, f = struct.unpack("<II", blob[4:12])
    digests = [blob[12 + i * 32 : 12 + (i + 1) * 32].hex() for i in range(3)]
    expected_len = head + 8 * c * f + 8 * c
    if len(blob) != expected_len:
        raise DataError(f"{path}: truncated or corrupt checkpoint")
    meta = {
        "label_vocab_hash": digests[0],
        "term_vocab_hash": digests[1],
        "config_fingerprint": digests[2],
    }
    if expect_label_hash is not None and expect_label_hash != meta["label_vocab_hash"]:
        raise DataError(f"{path}: label vocabulary does not match checkpoint")
    if expect_term_hash is not None and expect_term_hash != meta["term_vocab_hash"]:
        raise DataError(f"{path}: term vocabulary does not match checkpoint")
    w = np.frombuffer(blob, dtype="<f8", count=c * f, offset=head).reshape(c, f).copy()
    b = np.frombuffer(blob, dtype="<f8", count=c, offset=head + 8 * c * f).copy()
    return Model(w, b, meta)
