"""Configuration, shared layers and checkpointing for the scope taggers."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .. import autodiff as ad
from ..corpus import NegationInstance, Sentence
from ..embeddings import EmbeddingTable, FeatureTables, build_vocab

CHECKPOINT_FORMAT = "negscope-checkpoint"
CHECKPOINT_VERSION = 1

OUT, IN = 0, 1


@dataclass
class ModelConfig:
    d_w: int = 100
    d_c: int = 16
    d_p: int = 32
    d_l: int = 32
    d_h: int = 200
    layers: int = 4
    dropout: float = 0.2
    neighbor_dropout: float = 0.2
    pre_encoder: str = "dense"
    gcn_form: str = "weighted"
    injection: bool = True
    use_word: bool = True
    use_pos: bool = True
    seed: int = 1
    precision: str = "float32"

    def __post_init__(self):
        for name in ("d_w", "d_c", "d_p", "d_l", "d_h"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.layers < 1:
            raise ValueError("layers must be at least 1")
        for name in ("dropout", "neighbor_dropout"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.pre_encoder not in ("dense", "bilstm"):
            raise ValueError(f"unknown pre_encoder {self.pre_encoder!r}")
        if self.gcn_form not in ("weighted", "bias"):
            raise ValueError(f"unknown gcn_form {self.gcn_form!r}")
        if self.precision not in ("float32", "float64"):
            raise ValueError(f"unknown precision {self.precision!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name: f.type for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def uniform(rng, shape, scale=0.1):
    return rng.uniform(-scale, scale, size=shape)


class LSTMWeights:
    """Fused gate weights of a sequential LSTM, gates ordered i, f, o, u."""

    def __init__(self, prefix: str, d_in: int, d_h: int, rng):
        b = np.zeros(4 * d_h)
        b[d_h:2 * d_h] = 1.0
        self.d_h = d_h
        self.W = ad.parameter(uniform(rng, (d_in, 4 * d_h)), f"{prefix}.W")
        self.U = ad.parameter(uniform(rng, (d_h, 4 * d_h)), f"{prefix}.U")
        self.b = ad.parameter(b, f"{prefix}.b")

    def params(self) -> list:
        return [self.W, self.U, self.b]


def run_lstm(X: ad.Tensor, w: LSTMWeights, reverse: bool = False) -> list:
    """Run an LSTM over the rows of ``X``; returns hidden vectors in row order."""
    n, h = X.shape[0], w.d_h
    XW = ad.add(ad.matmul(X, w.W), w.b)
    order = range(n - 1, -1, -1) if reverse else range(n)
    hs = [None] * n
    h_prev = c_prev = None
    for t in order:
        z = XW[t]
        if h_prev is not None:
            z = ad.add(z, ad.matmul(h_prev, w.U))
        gates = ad.sigmoid(z[:3 * h])
        i, f, o = gates[:h], gates[h:2 * h], gates[2 * h:]
        u = ad.tanh(z[3 * h:])
        c = ad.mul(i, u)
        if c_prev is not None:
            c = ad.add(c, ad.mul(f, c_prev))
        h_prev = ad.mul(o, ad.tanh(c))
        c_prev = c
        hs[t] = h_prev
    return hs


def make_feature_tables(corpus: Sequence[Sentence], config: ModelConfig, rng,
                        with_label: bool, pretrained: EmbeddingTable | None = None) -> FeatureTables:
    word = None
    if config.use_word:
        if pretrained is not None:
            word = pretrained
        else:
            word = EmbeddingTable.random(build_vocab(corpus, "form"), config.d_w, rng, name="word")
    cue = ad.parameter(uniform(rng, (2, config.d_c)), "emb.cue")
    pos = EmbeddingTable.random(build_vocab(corpus, "upos"), config.d_p, rng, name="pos") \
        if config.use_pos else None
    label = EmbeddingTable.random(build_vocab(corpus, "deprel"), config.d_l, rng, name="label") \
        if with_label else None
    return FeatureTables(word, cue, pos, label)


class ScopeModel:
    """Common interface of the three taggers.

    Subclasses implement :meth:`forward`, which returns an ``(n, 2)``
    tensor of (p_out, p_in) rows for the tokens of one instance.
    """

    kind = ""
    uses_label = False

    def __init__(self, config: ModelConfig, tables: FeatureTables):
        self.config = config
        self.tables = tables
        self.weights: dict[str, ad.Tensor] = {}

    # subclasses fill self.weights
    def forward(self, instance: NegationInstance, train: bool = False, rng=None) -> ad.Tensor:
        raise NotImplementedError

    def parameters(self) -> dict:
        params = dict(self.tables.parameters())
        params.update(self.weights)
        return params

    def all_tensors(self) -> dict:
        """Every array that defines the model, trainable or not."""
        out = {f"emb.{k}": t.weight for k, t in self.tables.tables().items()}
        out["emb.cue"] = self.tables.cue
        out.update(self.extra_tables())
        out.update(self.weights)
        return out

    def extra_tables(self) -> dict:
        return {}

    def extra_table_meta(self) -> dict:
        return {}

    @classmethod
    def from_arrays(cls, config: ModelConfig, tables: FeatureTables, arrays: dict,
                    extra_meta: dict) -> "ScopeModel":
        # shapes only; values are copied in by load_state
        return cls(config, tables, np.random.default_rng(0))

    def input_width(self) -> int:
        if self.uses_label:
            return self.tables.width
        return self.tables.width - (self.tables.label.dim if self.tables.label is not None else 0)

    def encode(self, instance: NegationInstance) -> ad.Tensor:
        from ..embeddings import encode_sentence
        return encode_sentence(instance.sentence.tokens, instance.cue, self.tables, self.uses_label)

    def loss(self, instance: NegationInstance, train: bool = True, rng=None) -> ad.Tensor:
        """Summed token cross-entropy over non-cue tokens."""
        probs = self.forward(instance, train=train, rng=rng)
        targets = instance.labels()
        weights = [0.0 if t.id in instance.cue else 1.0 for t in instance.sentence.tokens]
        return ad.cross_entropy(probs, targets, weights)

    def predict_proba(self, instance: NegationInstance) -> np.ndarray:
        """(p_out, p_in) per token with cue tokens forced out of scope."""
        probs = np.array(self.forward(instance, train=False).data, dtype=np.float64)
        for t in instance.sentence.tokens:
            if t.id in instance.cue:
                probs[t.id - 1] = (1.0, 0.0)
        return probs

    def predict_scope(self, instance: NegationInstance) -> frozenset:
        probs = self.predict_proba(instance)
        return frozenset(i + 1 for i in np.flatnonzero(probs[:, IN] > probs[:, OUT]))

    def zero_(self) -> None:
        for t in self.all_tensors().values():
            t.data[...] = 0.0

    def state(self) -> dict:
        return {k: t.data.copy() for k, t in self.all_tensors().items()}

    def load_state(self, state: dict) -> None:
        for k, t in self.all_tensors().items():
            t.data[...] = state[k]


def readout(H: ad.Tensor, W: ad.Tensor, b: ad.Tensor, rate: float, train: bool, rng) -> ad.Tensor:
    H = ad.dropout(H, rate, rng, train)
    return ad.softmax(ad.add(ad.matmul(H, W), b))


# --------------------------------------------------------------- checkpoints

def _table_meta(table: EmbeddingTable | None):
    if table is None:
        return None
    return {"words": table.words, "trainable": table.trainable}


def save_checkpoint(path, model: ScopeModel, extra: dict | None = None) -> None:
    """Write config, vocabularies and all arrays into one ``.npz`` file.

    Layout: ``header`` holds a JSON document with ``format``, ``version``,
    ``kind``, ``config`` and per-table vocabularies; every array is stored
    under ``t/<name>`` with the names returned by ``all_tensors()``.
    """
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "kind": model.kind,
        "config": asdict(model.config),
        "tables": {k: _table_meta(t) for k, t in model.tables.tables().items()},
        "extra_tables": model.extra_table_meta(),
        "extra": extra or {},
    }
    arrays = {f"t/{k}": t.data for k, t in model.all_tensors().items()}
    arrays["header"] = np.array(json.dumps(header))
    path = Path(path)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> ScopeModel:
    from . import MODEL_CLASSES
    with np.load(path, allow_pickle=False) as z:
        header = json.loads(str(z["header"]))
        arrays = {k[2:]: z[k] for k in z.files if k.startswith("t/")}
    if header.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a negscope checkpoint")
    if header["version"] > CHECKPOINT_VERSION:
        raise ValueError(f"checkpoint version {header['version']} is newer than supported")
    config = ModelConfig.from_dict(header["config"])
    cls = MODEL_CLASSES[header["kind"]]
    meta = header["tables"]
    with ad.precision(config.precision):
        def table(name):
            m = meta.get(name)
            if m is None:
                return None
            return EmbeddingTable(m["words"], arrays[f"emb.{name}"], m["trainable"], name=name)

        tables = FeatureTables(table("word"), ad.parameter(arrays["emb.cue"], "emb.cue"),
                               table("pos"), table("label"))
        model = cls.from_arrays(config, tables, arrays, header.get("extra_tables", {}))
    model.load_state(arrays)
    model.checkpoint_extra = header.get("extra", {})
    return model
