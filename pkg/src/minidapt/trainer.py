"""Training loops: MLM domain adaptation and two-stage classifier fine-tuning
with best-validation-checkpoint selection and curve logging."""

import csv
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .autodiff import IGNORE_LABEL, bce_with_logits, masked_cross_entropy
from .corpus import SplitSpec
from .masking import MaskingConfig, collate
from .metrics import classification_report, mlm_report
from .optim import Schedule, adam_step, lr_at, set_trainable

# rng stream tags, combined with the run seed so every consumer gets an
# independent deterministic stream
_SHUFFLE, _TRAIN_MASK, _VAL_MASK, _DROPOUT, _FT_SHUFFLE, _FT_DROPOUT = range(6)


@dataclass
class MLMConfig:
    epochs: int = 7
    batch_size: int = 16
    peak_lr: float = 1e-4
    warmup_steps: int = 1000
    weight_decay: float = 0.01


@dataclass
class FinetuneConfig:
    stage1_epochs: int = 20
    stage2_epochs: int = 20
    batch_size: int = 32
    lr_frozen: float = 1e-5
    lr_unfrozen: float = 1e-6


@dataclass
class TrainConfig:
    mlm: MLMConfig = field(default_factory=MLMConfig)
    finetune: FinetuneConfig = field(default_factory=FinetuneConfig)
    split: SplitSpec = field(default_factory=SplitSpec)
    masking: MaskingConfig = field(default_factory=MaskingConfig)
    chunk_size: int = 128
    seed: int = 0

    def to_dict(self):
        return asdict(self)


@dataclass
class CurvePoint:
    stage: str
    epoch: int
    train_loss: float
    val_loss: float
    train_acc: float = None
    val_acc: float = None


def write_curves(points, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["stage", "epoch", "train_loss", "val_loss", "train_acc", "val_acc"])
        for p in points:
            w.writerow([p.stage, p.epoch, repr(p.train_loss), repr(p.val_loss),
                        "" if p.train_acc is None else repr(p.train_acc),
                        "" if p.val_acc is None else repr(p.val_acc)])


def _batches(n, batch_size, merge_singleton=False):
    out = [list(range(i, min(i + batch_size, n))) for i in range(0, n, batch_size)]
    if merge_singleton and len(out) > 1 and len(out[-1]) == 1:
        out[-2].extend(out.pop())
    return out


def effective_warmup(total_steps):
    """1,000 warmup steps, scaled down to total/10 on runs shorter than 10k steps."""
    if total_steps >= 10000:
        return 1000
    return max(1, min(1000, total_steps // 10))


def _mlm_batch_loss(model, batch, mode, rng=None):
    hidden = model.encode_forward(batch.input_ids, pad_mask=None, mode=mode, rng=rng)
    logits = model.mlm_logits(hidden)
    loss = masked_cross_entropy(logits, batch.labels)
    n_labeled = int((batch.labels != IGNORE_LABEL).sum())
    return loss, n_labeled


def mlm_validation_loss(ckpt, chunks, cfg, vocab):
    """Mean cross-entropy (nats per labeled token) with fixed-seed masking,
    unshuffled."""
    model = ckpt.model
    total, count = 0.0, 0
    rng = np.random.default_rng([cfg.seed, _VAL_MASK])
    for idx in _batches(len(chunks), cfg.mlm.batch_size):
        batch = collate([chunks[i] for i in idx], cfg.masking, vocab, rng)
        loss, n = _mlm_batch_loss(model, batch, mode="eval")
        total += float(loss.data) * n
        count += n
    if count == 0:
        raise ValueError("mlm validation: no labeled positions")
    return total / count


def adapt_mlm(init, splits, cfg, vocab):
    """Run the MLM adaptation loop; returns (final checkpoint, curve points)."""
    train_chunks, val_chunks = splits[0], splits[1]
    if not train_chunks or not val_chunks:
        raise ValueError("adapt_mlm: empty split")
    if cfg.mlm.epochs == 0:
        return init.copy(), []
    ckpt = init.copy()
    model = ckpt.model
    set_trainable(model, "all")
    params = list(model.params.values())

    n_batches = len(_batches(len(train_chunks), cfg.mlm.batch_size))
    total_steps = cfg.mlm.epochs * n_batches
    warmup = effective_warmup(total_steps) if cfg.mlm.warmup_steps == 1000 \
        else min(cfg.mlm.warmup_steps, total_steps)
    schedule = Schedule(cfg.mlm.peak_lr, warmup, total_steps, cfg.mlm.weight_decay)

    shuffle_rng = np.random.default_rng([cfg.seed, _SHUFFLE])
    curves = []
    step = 0
    for epoch in range(1, cfg.mlm.epochs + 1):
        order = shuffle_rng.permutation(len(train_chunks))
        epoch_total, epoch_count = 0.0, 0
        for bidx, idx in enumerate(_batches(len(train_chunks), cfg.mlm.batch_size)):
            mask_rng = np.random.default_rng([cfg.seed, _TRAIN_MASK, epoch, bidx])
            drop_rng = np.random.default_rng([cfg.seed, _DROPOUT, epoch, bidx])
            batch = collate([train_chunks[order[i]] for i in idx],
                            cfg.masking, vocab, mask_rng)
            model.zero_grads()
            loss, n = _mlm_batch_loss(model, batch, mode="train", rng=drop_rng)
            loss.backward()
            step += 1
            adam_step(params, ckpt.adam, lr_at(schedule, step), cfg.mlm.weight_decay)
            epoch_total += float(loss.data) * n
            epoch_count += n
        train_loss = epoch_total / max(epoch_count, 1)
        val_loss = mlm_validation_loss(ckpt, val_chunks, cfg, vocab)
        curves.append(CurvePoint("mlm", epoch, train_loss, val_loss))
    ckpt.provenance = {"stage": "mlm", "epoch": cfg.mlm.epochs,
                       "val_loss": curves[-1].val_loss}
    return ckpt, curves


def encode_examples(docs, vocab, max_len):
    """CLS + subword ids + SEP, truncated then PAD-padded to max_len.
    Returns (ids [N,T], pad_mask [N,T], labels [N])."""
    from .tokenizer import encode
    ids = np.full((len(docs), max_len), vocab.pad_id, dtype=np.int64)
    mask = np.zeros((len(docs), max_len), dtype=bool)
    labels = np.zeros(len(docs), dtype=np.float64)
    for i, doc in enumerate(docs):
        body = encode(vocab, doc.text).ids[:max_len - 2]
        row = [vocab.cls_id] + body + [vocab.sep_id]
        ids[i, :len(row)] = row
        mask[i, :len(row)] = True
        if doc.label is None:
            raise ValueError("encode_examples: document without label")
        labels[i] = doc.label
    return ids, mask, labels


def _classifier_eval(ckpt, ids, mask, labels, batch_size):
    """Eval-mode loss, accuracy, and probabilities over a dataset."""
    model = ckpt.model
    probs = np.empty(len(ids))
    total = 0.0
    for idx in _batches(len(ids), batch_size):
        hidden = model.encode_forward(ids[idx], pad_mask=mask[idx], mode="eval")
        logits = model.classify_logits(hidden, mode="eval")
        total += float(bce_with_logits(logits, labels[idx]).data) * len(idx)
        probs[idx] = _sigmoid(logits.data)
    preds = (probs >= 0.5).astype(int)
    acc = float((preds == labels.astype(int)).mean())
    return total / len(ids), acc, probs


def _sigmoid(z):
    from .autodiff import stable_sigmoid
    return stable_sigmoid(z)


def finetune_staged(base, dataset_splits, cfg, vocab):
    """Two-stage fine-tuning: head-only at lr_frozen, then full model at
    lr_unfrozen from the stage-1 best weights; returns the checkpoint with
    the lowest validation loss seen in either stage, plus curve points."""
    train_docs, val_docs = dataset_splits[0], dataset_splits[1]
    if not train_docs or not val_docs:
        raise ValueError("finetune_staged: empty split")
    ft = cfg.finetune
    if ft.stage1_epochs == 0 and ft.stage2_epochs == 0:
        return base.copy(), []
    max_len = base.model.config.max_len
    tr_ids, tr_mask, tr_labels = encode_examples(train_docs, vocab, max_len)
    va_ids, va_mask, va_labels = encode_examples(val_docs, vocab, max_len)

    curves = []
    best = None  # (val_loss, checkpoint)

    def run_stage(ckpt, stage_idx, stage_name, selector, epochs, lr):
        nonlocal best
        model = ckpt.model
        set_trainable(model, selector)
        params = list(model.params.values())
        shuffle_rng = np.random.default_rng([cfg.seed, _FT_SHUFFLE, stage_idx])
        for epoch in range(1, epochs + 1):
            order = shuffle_rng.permutation(len(tr_ids))
            total = 0.0
            for bidx, idx in enumerate(_batches(len(tr_ids), ft.batch_size,
                                                merge_singleton=True)):
                sel = order[idx]
                drop_rng = np.random.default_rng(
                    [cfg.seed, _FT_DROPOUT, stage_idx, epoch, bidx])
                model.zero_grads()
                hidden = model.encode_forward(tr_ids[sel], pad_mask=tr_mask[sel],
                                              mode="train", rng=drop_rng)
                logits = model.classify_logits(hidden, mode="train", rng=drop_rng)
                loss = bce_with_logits(logits, tr_labels[sel])
                loss.backward()
                adam_step(params, ckpt.adam, lr)
                total += float(loss.data) * len(sel)
            train_loss = total / len(tr_ids)
            _, train_acc, _ = _classifier_eval(ckpt, tr_ids, tr_mask, tr_labels,
                                               ft.batch_size)
            val_loss, val_acc, _ = _classifier_eval(ckpt, va_ids, va_mask, va_labels,
                                                    ft.batch_size)
            curves.append(CurvePoint(stage_name, epoch, train_loss, val_loss,
                                     train_acc, val_acc))
            if best is None or val_loss < best[0]:
                snap = ckpt.copy()
                snap.provenance = {"stage": stage_name, "epoch": epoch,
                                   "val_loss": val_loss}
                best = (val_loss, snap)
        return ckpt

    ckpt = base.copy()
    run_stage(ckpt, 1, "frozen", "head-only", ft.stage1_epochs, ft.lr_frozen)
    stage2_start = best[1].copy() if best is not None else ckpt
    run_stage(stage2_start, 2, "unfrozen", "all", ft.stage2_epochs, ft.lr_unfrozen)
    final = best[1].copy()
    return final, curves


def evaluate(ckpt, testset, task, cfg, vocab):
    """EvalReport on held-out data: perplexity for mlm, threshold-0.5
    classification metrics otherwise."""
    if task == "mlm":
        if not testset:
            raise ValueError("evaluate: empty test set")
        nats = mlm_validation_loss(ckpt, testset, cfg, vocab)
        n = sum(1 for _ in testset)
        return mlm_report(nats, n)
    elif task == "classify":
        if not testset:
            raise ValueError("evaluate: empty test set")
        ids, mask, labels = encode_examples(testset, vocab, ckpt.model.config.max_len)
        _, _, probs = _classifier_eval(ckpt, ids, mask, labels,
                                       cfg.finetune.batch_size)
        return classification_report(probs, labels.astype(int))
    raise ValueError(f"unknown task {task!r}")
