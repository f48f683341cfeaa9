import numpy as np
import pytest

from minidapt.checkpoint import Checkpoint
from minidapt.corpus import chunk_stream
from minidapt.fixtures import separable_dataset, two_domain_corpus
from minidapt.masking import MaskingConfig
from minidapt.model import EncoderConfig, TransformerModel
from minidapt.tokenizer import train_vocab
from minidapt.trainer import FinetuneConfig, MLMConfig, TrainConfig


@pytest.fixture(scope="session")
def small_vocab():
    docs_a, docs_b = two_domain_corpus(seed=0, n_docs=20)
    texts = [d.text for d in docs_a + docs_b] + [d.text for d in separable_dataset(0)]
    return train_vocab(texts, 160)


@pytest.fixture(scope="session")
def small_chunks(small_vocab):
    docs_a, docs_b = two_domain_corpus(seed=0, n_docs=20)
    return chunk_stream(docs_b, small_vocab, 32)


def tiny_model(vocab, seed=0, **kw):
    base = dict(vocab_size=vocab.size, num_layers=1, d_model=16, num_heads=2,
                d_ff=32, max_len=64, dropout_rate=0.1, head_hidden=(8, 4),
                head_dropout=0.5, seed=seed)
    base.update(kw)
    return TransformerModel(EncoderConfig(**base))


def tiny_train_config(**kw):
    cfg = TrainConfig(
        mlm=MLMConfig(epochs=2, batch_size=8, peak_lr=1e-3, warmup_steps=1000,
                      weight_decay=0.01),
        finetune=FinetuneConfig(stage1_epochs=2, stage2_epochs=2, batch_size=8,
                                lr_frozen=1e-3, lr_unfrozen=1e-4),
        chunk_size=32,
        seed=0,
        masking=MaskingConfig(),
    )
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


@pytest.fixture
def tiny_checkpoint(small_vocab):
    return Checkpoint(tiny_model(small_vocab))
