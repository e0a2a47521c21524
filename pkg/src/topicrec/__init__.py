"""Long-tailed multi-label topic recommendation toolkit.

Training combines class-aware re-sampling, re-balanced instance weighting,
and negative-tolerant regularization over a linear TF-IDF classifier;
inference adds a tunable low-confidence filter; evaluation reports micro
P/R/F1 at top-k overall and per frequency bucket (head/mid/tail) and can
fuse rankings from an external recommender.
"""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    LabelVocab,
    RepoRecord,
    canonicalize_topics,
    clean_text,
    generate_synthetic,
    ingest_jsonl,
    label_counts,
    split,
)
from .errors import ConfigError, DataError, NumericalError
from .evaluate import (
    BucketSpec,
    MetricCounts,
    MetricReport,
    bucket_metrics,
    build_report,
    emit_report,
    fuse,
    micro_metrics,
    partition_labels,
)
from .featurize import SparseVec, TermVocab, build_vocab, tfidf
from .inference import filter_low_confidence, predict_proba, top_k, tune_threshold
from .losses import (
    LossConfig,
    LossOutput,
    bce,
    compute_class_bias,
    db_loss,
    focal,
    nt_bce,
    rebalanced_bce,
)
from .predictions import PredictionSet, read_predictions, write_predictions
from .sampling import (
    EpochPlan,
    InstanceWeights,
    LabelStats,
    build_instance_weights,
    epoch_plan,
    rebalance_weights,
    sampling_frequencies,
    smooth_weight,
)
from .trainer import Model, OptimConfig, forward, init_model, load_checkpoint, save_checkpoint, train
