"""Command-line pipeline driver.

Subcommands: fixtures, vocab, adapt, finetune, evaluate, baseline, compare.
Each run writes a manifest with the fully resolved config, seed, and input
hashes so a run can be reproduced byte-for-byte.
"""

import argparse
import copy
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import baseline as bl
from . import fixtures
from .checkpoint import Checkpoint
from .corpus import SplitSpec, chunk_stream, load_documents, split
from .masking import MaskingConfig
from .metrics import EvalReport
from .model import EncoderConfig, TransformerModel
from .tokenizer import Vocabulary, encode, train_vocab
from .trainer import (FinetuneConfig, MLMConfig, TrainConfig, adapt_mlm,
                      evaluate, finetune_staged, write_curves)

DEFAULTS = {
    "seed": None,
    "chunk_size": 128,
    "vocab_target_size": 512,
    "encoder": {"num_layers": 2, "d_model": 64, "num_heads": 4, "d_ff": 128,
                "max_len": 128, "dropout_rate": 0.1, "head_hidden": [256, 128],
                "head_dropout": 0.5, "tie_mlm": False},
    "mlm": {"epochs": 7, "batch_size": 16, "peak_lr": 1e-4,
            "warmup_steps": 1000, "weight_decay": 0.01},
    "finetune": {"stage1_epochs": 20, "stage2_epochs": 20, "batch_size": 32,
                 "lr_frozen": 1e-5, "lr_unfrozen": 1e-6},
    "masking": {"p_mask": 0.15, "p_wwm": 0.2,
                "replacement_split": [0.8, 0.1, 0.1]},
    "mlm_split": [0.8, 0.1, 0.1],
    "cls_split": [0.68, 0.12, 0.20],
    "val_fraction_of_train": None,
    "baseline": {"lambda_grid": list(bl.DEFAULT_LAMBDA_GRID), "epochs": 50},
}


class CliError(Exception):
    def __init__(self, message, code=2):
        super().__init__(message)
        self.code = code


def _deep_merge(base, override):
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def resolve_config(args):
    cfg = copy.deepcopy(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as f:
            cfg = _deep_merge(cfg, json.load(f))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise CliError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if cfg["seed"] is None:
        raise CliError("a seed is required: pass --seed or set it in the config")
    return cfg


def _train_config(cfg):
    return TrainConfig(
        mlm=MLMConfig(**cfg["mlm"]),
        finetune=FinetuneConfig(**cfg["finetune"]),
        split=SplitSpec(ratios=tuple(cfg["cls_split"]), seed=cfg["seed"]),
        masking=MaskingConfig(replacement_split=tuple(cfg["masking"]["replacement_split"]),
                              p_mask=cfg["masking"]["p_mask"],
                              p_wwm=cfg["masking"]["p_wwm"],
                              seed=cfg["seed"]),
        chunk_size=cfg["chunk_size"],
        seed=cfg["seed"],
    )


def _encoder_config(cfg, vocab_size):
    e = cfg["encoder"]
    return EncoderConfig(vocab_size=vocab_size, num_layers=e["num_layers"],
                         d_model=e["d_model"], num_heads=e["num_heads"],
                         d_ff=e["d_ff"], max_len=e["max_len"],
                         dropout_rate=e["dropout_rate"],
                         head_hidden=tuple(e["head_hidden"]),
                         head_dropout=e["head_dropout"], tie_mlm=e["tie_mlm"],
                         seed=cfg["seed"])


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _out_dir(args):
    out = os.environ.get("MINIDAPT_OUT", args.out)
    os.makedirs(out, exist_ok=True)
    return out


def _write_manifest(out, cfg, inputs, extra=None):
    manifest = {"config": cfg,
                "inputs": {p: _sha256(p) for p in inputs}}
    if extra:
        manifest.update(extra)
    path = os.path.join(out, "manifest.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return path


def _split_indices(n, ratios, seed):
    return split(list(range(n)), SplitSpec(ratios=tuple(ratios), seed=seed))


def _cls_splits(docs, cfg):
    """Train/val/test document splits for classification; shared with the
    baseline via the split seed so comparisons use identical test sets."""
    f = cfg["val_fraction_of_train"]
    if f is None:
        ratios = cfg["cls_split"]
    else:
        test = cfg["cls_split"][2]
        ratios = [(1 - test) * (1 - f), (1 - test) * f, test]
    idx = _split_indices(len(docs), ratios, cfg["seed"])
    parts = tuple([docs[i] for i in part] for part in idx)
    return parts, idx


def _load_format(path):
    return "csv" if path.endswith(".csv") else "jsonl"


# ---- commands -----------------------------------------------------------


def cmd_fixtures(args):
    cfg = resolve_config(args)
    out = _out_dir(args)
    paths = fixtures.generate_all(out, cfg["seed"])
    print("\n".join(f"{k}: {v}" for k, v in sorted(paths.items())))
    return 0


def cmd_vocab(args):
    cfg = resolve_config(args)
    out = _out_dir(args)
    docs = []
    for path in args.corpus:
        docs.extend(load_documents(path, _load_format(path)))
    target = args.target_size or cfg["vocab_target_size"]
    vocab = train_vocab([d.text for d in docs], target, seed=cfg["seed"])
    vocab_path = os.path.join(out, "vocab.json")
    vocab.save(vocab_path)
    total = sum(len(encode(vocab, d.text).ids) for d in docs)
    unk = sum(1 for d in docs for i in encode(vocab, d.text).ids if i == vocab.unk_id)
    stats = {"vocab_size": vocab.size, "corpus_tokens": total,
             "coverage": 1.0 - unk / max(total, 1)}
    with open(os.path.join(out, "vocab_stats.json"), "w", encoding="utf-8") as f:
        json.dump(stats, f, indent=2, sort_keys=True)
    _write_manifest(out, cfg, args.corpus, {"outputs": ["vocab.json", "vocab_stats.json"]})
    print(f"wrote {vocab_path} ({vocab.size} tokens, coverage {stats['coverage']:.4f})")
    return 0


def _fresh_checkpoint(cfg, vocab):
    return Checkpoint(TransformerModel(_encoder_config(cfg, vocab.size)))


def cmd_adapt(args):
    cfg = resolve_config(args)
    out = _out_dir(args)
    vocab = Vocabulary.load(args.vocab)
    docs = load_documents(args.corpus, _load_format(args.corpus))
    tc = _train_config(cfg)
    idx_parts = _split_indices(len(docs), cfg["mlm_split"], cfg["seed"])
    chunk_parts = [chunk_stream([docs[i] for i in part], vocab, cfg["chunk_size"])
                   for part in idx_parts]
    if args.init:
        init = Checkpoint.load(args.init)
    else:
        init = _fresh_checkpoint(cfg, vocab)
    ckpt, curves = adapt_mlm(init, chunk_parts, tc, vocab)
    ckpt_path = os.path.join(out, "adapted.ckpt")
    ckpt.save(ckpt_path)
    write_curves(curves, os.path.join(out, "curves.csv"))
    report = evaluate(ckpt, chunk_parts[2], "mlm", tc, vocab)
    report.save(os.path.join(out, "report.json"))
    _write_manifest(out, cfg, [args.vocab, args.corpus],
                    {"outputs": ["adapted.ckpt", "curves.csv", "report.json"],
                     "provenance": ckpt.provenance})
    print(f"wrote {ckpt_path}; test perplexity {report.perplexity:.4f}")
    return 0


def cmd_finetune(args):
    cfg = resolve_config(args)
    out = _out_dir(args)
    vocab = Vocabulary.load(args.vocab)
    docs = load_documents(args.dataset, _load_format(args.dataset))
    if any(d.label is None for d in docs):
        raise CliError(f"{args.dataset}: missing label on one or more records")
    tc = _train_config(cfg)
    (train_docs, val_docs, test_docs), idx = _cls_splits(docs, cfg)
    if args.base == "vanilla":
        base = _fresh_checkpoint(cfg, vocab)
        inputs = [args.vocab, args.dataset]
    else:
        base = Checkpoint.load(args.base)
        inputs = [args.vocab, args.dataset, args.base]
    ckpt, curves = finetune_staged(base, (train_docs, val_docs, test_docs), tc, vocab)
    ckpt_path = os.path.join(out, "classifier.ckpt")
    ckpt.save(ckpt_path)
    write_curves(curves, os.path.join(out, "curves.csv"))
    report = evaluate(ckpt, test_docs, "classify", tc, vocab)
    report.save(os.path.join(out, "report.json"))
    _write_manifest(out, cfg, inputs,
                    {"outputs": ["classifier.ckpt", "curves.csv", "report.json"],
                     "provenance": ckpt.provenance,
                     "test_indices": list(idx[2])})
    print(f"wrote {ckpt_path}; test F1 {report.f1:.4f}, accuracy {report.accuracy:.4f}")
    return 0


def cmd_evaluate(args):
    cfg = resolve_config(args)
    out = _out_dir(args)
    vocab = Vocabulary.load(args.vocab)
    ckpt = Checkpoint.load(args.ckpt)
    docs = load_documents(args.data, _load_format(args.data))
    tc = _train_config(cfg)
    if args.task == "mlm":
        data = chunk_stream(docs, vocab, cfg["chunk_size"])
    else:
        data = docs
    report = evaluate(ckpt, data, args.task, tc, vocab)
    report_path = os.path.join(out, "report.json")
    report.save(report_path)
    _write_manifest(out, cfg, [args.vocab, args.ckpt, args.data],
                    {"outputs": ["report.json"]})
    print(report.to_json())
    return 0


def cmd_baseline(args):
    cfg = resolve_config(args)
    out = _out_dir(args)
    docs = load_documents(args.dataset, _load_format(args.dataset))
    if any(d.label is None for d in docs):
        raise CliError(f"{args.dataset}: missing label on one or more records")
    (train_docs, val_docs, test_docs), idx = _cls_splits(docs, cfg)
    for part, name in [(train_docs, "train"), (val_docs, "val")]:
        if len({d.label for d in part}) < 2:
            raise CliError(f"baseline: {name} split contains a single class", code=1)
    tfidf = bl.fit_tfidf(train_docs)
    X_tr = bl.transform_all(tfidf, train_docs)
    X_va = bl.transform_all(tfidf, val_docs)
    X_te = bl.transform_all(tfidf, test_docs)
    y = lambda part: np.array([d.label for d in part])
    lsvm, lam = bl.tune_lsvm((X_tr, y(train_docs)), (X_va, y(val_docs)),
                             tuple(cfg["baseline"]["lambda_grid"]),
                             cfg["baseline"]["epochs"], seed=cfg["seed"])
    from .metrics import classification_report
    report = classification_report(lsvm.predict(X_te).astype(float), y(test_docs))
    bl.save_baseline(tfidf, lsvm, os.path.join(out, "baseline.json"))
    report.save(os.path.join(out, "report.json"))
    _write_manifest(out, cfg, [args.dataset],
                    {"outputs": ["baseline.json", "report.json"],
                     "chosen_lambda": lam,
                     "test_indices": list(idx[2])})
    print(f"baseline lambda {lam}; test F1 {report.f1:.4f}")
    return 0


COMPARE_COLUMNS = [("Precision", "precision"), ("Recall", "recall"),
                   ("F1-score", "f1"), ("Accuracy", "accuracy")]


def compare_table(reports):
    """rows: (name, {column: value}); bolds each column's maxima with **."""
    rows = []
    for name, rep in reports:
        if rep.task != "classify":
            raise CliError(f"{name}: not a classification report", code=1)
        rows.append((name, {col: getattr(rep, attr) for col, attr in COMPARE_COLUMNS}))
    maxima = {col: max(r[1][col] for r in rows) for col, _ in COMPARE_COLUMNS}
    lines = ["Model," + ",".join(c for c, _ in COMPARE_COLUMNS)]
    text = ["Model      " + "  ".join(f"{c:>12}" for c, _ in COMPARE_COLUMNS)]
    for name, vals in rows:
        lines.append(name + "," + ",".join(repr(vals[c]) for c, _ in COMPARE_COLUMNS))
        cells = []
        for c, _ in COMPARE_COLUMNS:
            s = f"{vals[c]:.4f}"
            if vals[c] == maxima[c]:
                s = f"**{s}**"
            cells.append(f"{s:>12}")
        text.append(f"{name:<11}" + "  ".join(cells))
    return "\n".join(text), "\n".join(lines) + "\n"


def cmd_compare(args):
    if len(args.reports) < 2:
        raise CliError("compare needs at least 2 report files")
    reports = []
    for path in args.reports:
        name = os.path.basename(os.path.dirname(path)) or os.path.basename(path)
        try:
            reports.append((name, EvalReport.load(path)))
        except (TypeError, json.JSONDecodeError) as e:
            raise CliError(f"{path}: schema mismatch ({e})", code=1)
    text, csv_text = compare_table(reports)
    out = _out_dir(args)
    with open(os.path.join(out, "comparison.csv"), "w", encoding="utf-8") as f:
        f.write(csv_text)
    print(text)
    return 0


# ---- argument parsing ----------------------------------------------------


def _common(p, out=True):
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    if out:
        p.add_argument("--out", required=True)


def build_parser():
    ap = argparse.ArgumentParser(prog="minidapt",
                                 description="Domain-adaptation pipeline for "
                                             "low-resource fake news detection")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixtures", help="generate synthetic fixture data")
    p.add_argument("action", choices=["generate"])
    _common(p)
    p.set_defaults(fn=cmd_fixtures)

    p = sub.add_parser("vocab", help="train a subword vocabulary")
    p.add_argument("--corpus", nargs="+", required=True)
    p.add_argument("--target-size", type=int)
    _common(p)
    p.set_defaults(fn=cmd_vocab)

    p = sub.add_parser("adapt", help="MLM domain adaptation")
    p.add_argument("--vocab", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--init", help="checkpoint to continue from (default: fresh init)")
    _common(p)
    p.set_defaults(fn=cmd_adapt)

    p = sub.add_parser("finetune", help="two-stage classifier fine-tuning")
    p.add_argument("--vocab", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--base", required=True,
                   help="'vanilla' or path to an adapted checkpoint")
    _common(p)
    p.set_defaults(fn=cmd_finetune)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint")
    p.add_argument("--vocab", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--task", choices=["mlm", "classify"], required=True)
    _common(p)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("baseline", help="TF-IDF + linear SVM baseline")
    p.add_argument("--dataset", required=True)
    _common(p)
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("compare", help="render a model/metric comparison table")
    p.add_argument("reports", nargs="+")
    _common(p)
    p.set_defaults(fn=cmd_compare)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
