"""Command-line entry point.

Commands: generate, ingest, train, tune-threshold, predict, evaluate, fuse.
Configuration comes from a flat ``key=value`` file (``--config``) and every
key can be overridden with a ``--key=value`` flag. Exit codes: 0 success,
2 config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import re
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluate as evaluate_mod
from .errors import ConfigError, DataError, NumericalError
from .featurize import build_vocab, load_term_vocab, save_term_vocab, tfidf
from .figures import render_report_figures
from .inference import (
    filter_low_confidence,
    predict_proba,
    rank_predictions,
    threshold_grid,
    tune_threshold,
)
from .losses import FAMILIES, LossConfig
from .predictions import read_predictions, write_predictions
from .sampling import NEGATIVE_WEIGHT_MODES, LabelStats, build_instance_weights
from .trainer import (
    OptimConfig,
    config_fingerprint,
    init_model,
    label_vocab_hash,
    load_checkpoint,
    resolve_nu,
    save_checkpoint,
    term_vocab_hash,
    train,
)

_OVERRIDE_RE = re.compile(r"^--([A-Za-z0-9_.]+)=(.*)$")


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_opt_int(s: str) -> int | None:
    low = s.strip().lower()
    if low in ("", "none"):
        return None
    return int(s)


def _parse_opt_float(s: str) -> float | None:
    low = s.strip().lower()
    if low in ("", "none"):
        return None
    return float(s)


def _parse_choice(options):
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"expected one of {options}, got {s!r}")
        return s

    return parse


# key -> (default, parser); the single source of truth for run configuration
CONFIG_SCHEMA: dict[str, tuple[object, object]] = {
    "family": ("db", _parse_choice(FAMILIES)),
    "lambda": (5.0, float),
    "kappa": (0.05, float),
    "focal_gamma": (2.0, float),
    "focal_alpha": (0.25, float),
    "sampler.cap": (None, _parse_opt_int),
    "sampler.alpha": (0.1, float),
    "sampler.beta": (10.0, float),
    "sampler.mu": (0.3, float),
    "sampler.negative_weight_mode": ("min_positive", _parse_choice(NEGATIVE_WEIGHT_MODES)),
    "opt.lr": (None, _parse_opt_float),
    "opt.weight_decay": (0.01, float),
    "opt.beta1": (0.9, float),
    "opt.beta2": (0.999, float),
    "opt.eps": (1e-8, float),
    "opt.epochs": (30, int),
    "opt.batch": (32, int),
    "featurize.min_df": (2, int),
    "featurize.max_features": (20_000, int),
    "ks": ("1,3,5", str),
    "tau": ("0.0", str),
    "grid_step": (0.01, float),
    "seed": (0, int),
    "disable_db_loss": (False, _parse_bool),
    "disable_filter": (False, _parse_bool),
    "buckets.head_min": (30, int),
    "buckets.mid_min": (9, int),
    "labels_per_doc": ("1,3", str),
    "fuse.ka": (3, int),
    "fuse.kb": (5, int),
}

_TRAIN_FINGERPRINT_KEYS = (
    "family",
    "lambda",
    "kappa",
    "focal_gamma",
    "focal_alpha",
    "sampler.cap",
    "sampler.alpha",
    "sampler.beta",
    "sampler.mu",
    "sampler.negative_weight_mode",
    "opt.lr",
    "opt.weight_decay",
    "opt.beta1",
    "opt.beta2",
    "opt.eps",
    "opt.epochs",
    "opt.batch",
    "featurize.min_df",
    "featurize.max_features",
    "seed",
)


def _set_key(cfg: dict, key: str, raw: str, origin: str) -> None:
    if key not in CONFIG_SCHEMA:
        raise ConfigError(f"{origin}: unknown config key '{key}'")
    _, parser = CONFIG_SCHEMA[key]
    try:
        cfg[key] = parser(raw)
    except ValueError as exc:
        raise ConfigError(f"{origin}: bad value for '{key}': {exc}") from exc


def build_config(config_path: str | None, overrides: list[str]) -> dict:
    cfg = {key: default for key, (default, _) in CONFIG_SCHEMA.items()}
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise DataError(f"config file not found: {config_path}")
        for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{config_path}: line {n}: expected 'key=value'")
            key, raw = line.split("=", 1)
            _set_key(cfg, key.strip(), raw.strip(), f"{config_path}: line {n}")
    for tok in overrides:
        m = _OVERRIDE_RE.match(tok)
        if not m:
            raise ConfigError(f"unrecognized argument {tok!r} (overrides use --key=value)")
        _set_key(cfg, m.group(1), m.group(2), "command line")
    return cfg


def _ints(text: str, n: int | None = None, what: str = "list") -> tuple[int, ...]:
    try:
        vals = tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad {what} {text!r}: expected comma-separated integers") from exc
    if n is not None and len(vals) != n:
        raise ConfigError(f"bad {what} {text!r}: expected {n} integers")
    return vals


def _corpus_base(path: str) -> str:
    return path[: -len(".jsonl")] if path.endswith(".jsonl") else path


def _load_corpus(path: str, vocab_path: str | None = None) -> corpus_mod.Corpus:
    if not Path(path).exists():
        raise DataError(f"corpus file not found: {path}")
    vocab_path = vocab_path or path + ".vocab"
    if not Path(vocab_path).exists():
        raise DataError(f"label vocabulary not found: {vocab_path}")
    vocab = corpus_mod.LabelVocab.from_files(vocab_path)
    return corpus_mod.ingest_jsonl(path, vocab)


def _write_corpus(corpus: corpus_mod.Corpus, path: str) -> None:
    corpus_mod.write_jsonl(corpus, path)
    corpus.vocab.save(path + ".vocab")


def _maybe_split(corpus: corpus_mod.Corpus, out: str, split_arg: str | None, seed: int) -> None:
    if not split_arg:
        return
    sizes = _ints(split_arg, 3, "--split")
    parts = corpus_mod.split(corpus, sizes, seed)
    base = _corpus_base(out)
    for name, part in zip(("train", "val", "test"), parts):
        _write_corpus(part, f"{base}.{name}.jsonl")


def _featurize_all(corpus, term_vocab):
    return [tfidf(rec.text, term_vocab) for rec in corpus.records]


def _file_sha(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def cmd_generate(args, cfg) -> int:
    lo, hi = _ints(args.labels_per_doc or cfg["labels_per_doc"], 2, "--labels-per-doc")
    corpus = corpus_mod.generate_synthetic(args.classes, args.docs, args.zipf, (lo, hi), args.seed)
    _write_corpus(corpus, args.out)
    _maybe_split(corpus, args.out, args.split, args.seed)
    print(f"generated {len(corpus)} documents over {len(corpus.vocab)} labels -> {args.out}")
    return 0


def cmd_ingest(args, cfg) -> int:
    if not Path(args.infile).exists():
        raise DataError(f"input file not found: {args.infile}")
    vocab = corpus_mod.LabelVocab.from_files(args.vocab, args.alias)
    corpus = corpus_mod.ingest_jsonl(args.infile, vocab)
    _write_corpus(corpus, args.out)
    _maybe_split(corpus, args.out, args.split, cfg["seed"])
    print(f"ingested {len(corpus)} records -> {args.out}")
    return 0


def _resolve_lr(cfg, family: str) -> float:
    if cfg["opt.lr"] is not None:
        return cfg["opt.lr"]
    return 1e-3 if family in ("bce", "focal") else 1e-2


def cmd_train(args, cfg) -> int:
    if args.loss:
        _set_key(cfg, "family", args.loss, "command line")
    family = "bce" if cfg["disable_db_loss"] else cfg["family"]
    cfg["family"] = family
    corpus = _load_corpus(args.corpus, args.vocab)
    if not corpus.records:
        raise DataError(f"{args.corpus}: training corpus is empty")

    stats = LabelStats.from_corpus(corpus, cap=cfg["sampler.cap"])
    term_vocab = build_vocab(corpus, cfg["featurize.min_df"], cfg["featurize.max_features"])
    feats = _featurize_all(corpus, term_vocab)
    weights = build_instance_weights(
        stats,
        corpus,
        alpha=cfg["sampler.alpha"],
        beta=cfg["sampler.beta"],
        mu=cfg["sampler.mu"],
        negative_mode=cfg["sampler.negative_weight_mode"],
    )
    loss_cfg = LossConfig(
        family=family,
        lam=cfg["lambda"],
        kappa=cfg["kappa"],
        focal_gamma=cfg["focal_gamma"],
        focal_alpha=cfg["focal_alpha"],
    )
    opt = OptimConfig(
        lr=_resolve_lr(cfg, family),
        weight_decay=cfg["opt.weight_decay"],
        beta1=cfg["opt.beta1"],
        beta2=cfg["opt.beta2"],
        eps=cfg["opt.eps"],
        epochs=cfg["opt.epochs"],
        batch=cfg["opt.batch"],
        seed=cfg["seed"],
    )
    train_cfg = {k: cfg[k] for k in _TRAIN_FINGERPRINT_KEYS}
    train_cfg["opt.lr"] = opt.lr
    meta = {
        "label_vocab_hash": label_vocab_hash(corpus.vocab),
        "term_vocab_hash": term_vocab_hash(term_vocab),
        "config_fingerprint": config_fingerprint(train_cfg),
    }
    nu = resolve_nu(loss_cfg, stats)
    bias = nu if family in ("ntbce", "db") else None
    model = init_model(stats.n_classes, len(term_vocab), cfg["seed"], bias=bias, meta=meta)

    log_path = args.out_checkpoint + ".log"
    Path(log_path).unlink(missing_ok=True)
    model, history = train(model, corpus, feats, stats, weights, loss_cfg, opt, log_path=log_path)
    save_checkpoint(model, args.out_checkpoint)
    save_term_vocab(term_vocab, args.out_checkpoint + ".terms")
    print(
        f"trained family={family} epochs={opt.epochs} final_loss={history[-1]:.6f} "
        f"-> {args.out_checkpoint}"
    )
    return 0


def _load_model_assets(checkpoint: str, terms: str | None, corpus_path: str, vocab: str | None):
    corpus = _load_corpus(corpus_path, vocab)
    terms = terms or checkpoint + ".terms"
    if not Path(checkpoint).exists():
        raise DataError(f"checkpoint not found: {checkpoint}")
    if not Path(terms).exists():
        raise DataError(f"term vocabulary not found: {terms}")
    term_vocab = load_term_vocab(terms)
    model = load_checkpoint(
        checkpoint,
        expect_label_hash=label_vocab_hash(corpus.vocab),
        expect_term_hash=term_vocab_hash(term_vocab),
    )
    return model, term_vocab, corpus


def _parse_ks(text: str) -> tuple[int, ...]:
    ks = _ints(text, None, "--ks")
    if not ks or any(k < 1 for k in ks):
        raise ConfigError(f"cutoffs must be positive integers, got {text!r}")
    return ks


def cmd_tune_threshold(args, cfg) -> int:
    model, term_vocab, val = _load_model_assets(args.checkpoint, args.terms, args.val, args.vocab)
    ks = _parse_ks(args.ks or cfg["ks"])
    grid = args.grid_step if args.grid_step is not None else cfg["grid_step"]
    if not 0.0 < grid <= 0.5:
        raise ConfigError(f"grid-step must be in (0, 0.5], got {grid}")
    tau = tune_threshold(model, val, _featurize_all(val, term_vocab), ks, grid)
    line = f"tau\t{tau:.6f}"
    if args.out:
        Path(args.out).write_text(line + "\n", encoding="utf-8")
    print(line)
    return 0


def cmd_predict(args, cfg) -> int:
    model, term_vocab, corpus = _load_model_assets(
        args.checkpoint, args.terms, args.corpus, args.vocab
    )
    if args.k < 1:
        raise ConfigError(f"--k must be >= 1, got {args.k}")
    feats = _featurize_all(corpus, term_vocab)
    preds = {
        rec.id: rank_predictions(predict_proba(model, feats[i]), args.k)
        for i, rec in enumerate(corpus.records)
    }
    labels = corpus.vocab.labels
    write_predictions(args.out + ".unfiltered", preds, labels)

    tau_arg = args.tau if args.tau is not None else cfg["tau"]
    if cfg["disable_filter"]:
        tau = 0.0
    elif tau_arg == "tune":
        if not args.val:
            raise ConfigError("--tau=tune requires --val with a validation corpus")
        val = _load_corpus(args.val, args.vocab)
        ks = _parse_ks(args.ks or cfg["ks"])
        tau = tune_threshold(model, val, _featurize_all(val, term_vocab), ks, cfg["grid_step"])
    else:
        try:
            tau = float(tau_arg)
        except ValueError as exc:
            raise ConfigError(f"--tau must be a number in [0,1] or 'tune', got {tau_arg!r}") from exc
        if not 0.0 <= tau <= 1.0:
            raise ConfigError(f"--tau must lie in [0,1], got {tau}")
    filtered = {rid: filter_low_confidence(ps, tau) for rid, ps in preds.items()}
    write_predictions(args.out, filtered, labels)
    print(f"wrote top-{args.k} predictions (tau={tau:g}) -> {args.out}")
    return 0


def cmd_evaluate(args, cfg) -> int:
    if not Path(args.preds).exists():
        raise DataError(f"predictions file not found: {args.preds}")
    preds = read_predictions(args.preds)
    truth_corpus = _load_corpus(args.truth, args.vocab)
    labels = truth_corpus.vocab.labels
    truth = {rec.id: {labels[t] for t in rec.topics} for rec in truth_corpus.records}

    head_min, mid_min = _ints(args.buckets or "30,9", 2, "--buckets")
    if args.train_corpus:
        counts = corpus_mod.label_count_map(_load_corpus(args.train_corpus, args.vocab))
    else:
        print(
            "warning: --train-corpus not given; bucket thresholds use the "
            "truth corpus counts",
            file=sys.stderr,
        )
        counts = corpus_mod.label_count_map(truth_corpus)
    buckets = evaluate_mod.partition_labels(
        counts, evaluate_mod.BucketSpec(head_min=head_min, mid_min=mid_min)
    )
    ks = _parse_ks(args.ks or cfg["ks"])
    fingerprint = config_fingerprint(
        {
            "ks": ",".join(map(str, ks)),
            "head_min": head_min,
            "mid_min": mid_min,
            "preds_sha": _file_sha(args.preds),
            "truth_sha": _file_sha(args.truth),
        }
    )
    report = evaluate_mod.build_report(preds, truth, buckets, ks, fingerprint)
    evaluate_mod.emit_report(report, args.out_report)
    if not args.no_figures:
        out = Path(args.out_report)
        render_report_figures(report, out.parent, stem=out.stem)
    print(f"avg_f1\t{report.avg_f1:.6f}")
    return 0


def cmd_fuse(args, cfg) -> int:
    for p in (args.a, args.b):
        if not Path(p).exists():
            raise DataError(f"predictions file not found: {p}")
    ka = args.ka if args.ka is not None else cfg["fuse.ka"]
    kb = args.kb if args.kb is not None else cfg["fuse.kb"]
    if ka < 0 or kb < 0:
        raise ConfigError(f"--ka/--kb must be non-negative, got {ka}, {kb}")
    fused = evaluate_mod.fuse(read_predictions(args.a), read_predictions(args.b), ka, kb)
    write_predictions(args.out, fused)
    print(f"fused top-{ka} + top-{kb} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topicrec",
        description="Long-tailed multi-label topic recommendation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a long-tailed labeled corpus")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--docs", type=int, required=True)
    p.add_argument("--zipf", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-per-doc", default=None, help="lo,hi labels per document")
    p.add_argument("--split", default=None, help="train,val,test sizes; writes sibling files")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("ingest", help="clean and canonicalize a raw JSONL corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--alias", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--split", default=None, help="train,val,test sizes; writes sibling files")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="train the linear classifier")
    p.add_argument("--corpus", required=True)
    p.add_argument("--loss", default=None, choices=FAMILIES)
    p.add_argument("--out-checkpoint", required=True)
    p.add_argument("--vocab", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune-threshold", help="pick the confidence threshold on validation data")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--terms", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--ks", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_tune_threshold)

    p = sub.add_parser("predict", help="write ranked topic recommendations")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--tau", default=None, help="threshold in [0,1], or 'tune' with --val")
    p.add_argument("--out", required=True)
    p.add_argument("--terms", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--val", default=None)
    p.add_argument("--ks", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against a truth corpus")
    p.add_argument("--preds", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--buckets", default=None, help="head_min,mid_min (default 30,9)")
    p.add_argument("--out-report", required=True)
    p.add_argument("--train-corpus", default=None)
    p.add_argument("--ks", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("fuse", help="merge an external ranker's predictions with ours")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--ka", type=int, default=None)
    p.add_argument("--kb", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_fuse)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    try:
        cfg = build_config(getattr(args, "config", None), extras)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
