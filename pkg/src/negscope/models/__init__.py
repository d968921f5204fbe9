"""Scope taggers: sequential BiLSTM, dependency LSTM and gated GCN."""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..embeddings import EmbeddingTable
from .base import (IN, OUT, ModelConfig, ScopeModel, load_checkpoint, make_feature_tables,
                   save_checkpoint)
from .bilstm import BiLSTM
from .dlstm import DLSTM
from .gcn import GCN, edge_vocab

MODEL_CLASSES = {"bilstm": BiLSTM, "dlstm": DLSTM, "gcn": GCN}

__all__ = ["BiLSTM", "DLSTM", "GCN", "ModelConfig", "ScopeModel", "MODEL_CLASSES",
           "build_model", "add_word_vectors", "save_checkpoint", "load_checkpoint", "IN", "OUT"]


def build_model(kind: str, corpus, config: ModelConfig | None = None,
                pretrained: EmbeddingTable | None = None) -> ScopeModel:
    """Create a freshly initialised model with vocabularies taken from ``corpus``.

    A ``pretrained`` word table is copied in frozen (cross-lingual mode);
    otherwise word vectors are random and trainable.
    """
    if kind not in MODEL_CLASSES:
        raise ValueError(f"unknown model kind {kind!r}; choose from {sorted(MODEL_CLASSES)}")
    config = config or ModelConfig()
    rng = np.random.default_rng(config.seed)
    with ad.precision(config.precision):
        if pretrained is not None:
            pretrained = EmbeddingTable(pretrained.words, pretrained.weight.data, trainable=False,
                                        name="word")
        cls = MODEL_CLASSES[kind]
        tables = make_feature_tables(corpus, config, rng, cls.uses_label, pretrained)
        if kind == "gcn":
            return cls(config, tables, rng, edge_vocab(corpus))
        return cls(config, tables, rng)


def add_word_vectors(model: ScopeModel, vectors: EmbeddingTable) -> int:
    """Append target-language word vectors to a trained model's frozen word table.

    Words the model already knows keep their vectors.  Returns the number
    of words added.
    """
    old = model.tables.word
    if old is None:
        return 0
    if vectors.dim != old.dim:
        raise ValueError(f"vector width {vectors.dim} does not match the model's {old.dim}")
    new_words = [w for w in vectors.words if w not in old]
    if not new_words:
        return 0
    data = old.weight.data
    rows = np.stack([vectors.vector(w) for w in new_words]).astype(data.dtype)
    matrix = np.concatenate([data[:-1], rows, data[-1:]], axis=0)
    model.tables.word = EmbeddingTable(old.words + new_words, matrix, old.trainable, "word")
    return len(new_words)
