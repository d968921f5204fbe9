"""Embedding tables and cross-lingual word-vector composition."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import autodiff as ad
from .corpus import CorpusError, Sentence, Token

log = logging.getLogger(__name__)

UNK = "<unk>"
METHODS = ("premapped", "average", "argmax")


class EmbeddingTable:
    """String-indexed embedding matrix whose last row is the UNK vector."""

    def __init__(self, words: Sequence[str], matrix: np.ndarray, trainable: bool = True,
                 name: str = ""):
        words = list(words)
        matrix = np.asarray(matrix)
        if matrix.ndim != 2 or matrix.shape[0] != len(words) + 1:
            raise ValueError(f"matrix of shape {matrix.shape} does not fit {len(words)} words + UNK")
        self.vocab = {w: i for i, w in enumerate(words)}
        if len(self.vocab) != len(words):
            raise ValueError("duplicate words in vocabulary")
        self.weight = ad.Tensor(matrix, requires_grad=trainable, name=name)
        self.trainable = trainable
        self.name = name

    @classmethod
    def random(cls, words: Iterable[str], dim: int, rng: np.random.Generator, scale: float = 0.1,
               trainable: bool = True, name: str = "") -> "EmbeddingTable":
        words = list(words)
        m = rng.uniform(-scale, scale, size=(len(words) + 1, dim))
        return cls(words, m, trainable, name)

    @property
    def dim(self) -> int:
        return self.weight.shape[1]

    @property
    def unk_index(self) -> int:
        return len(self.vocab)

    @property
    def words(self) -> list[str]:
        return sorted(self.vocab, key=self.vocab.__getitem__)

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, word: str) -> bool:
        return word in self.vocab

    def index(self, word: str) -> int:
        return self.vocab.get(word, self.unk_index)

    def indices(self, words: Iterable[str]) -> list[int]:
        get, unk = self.vocab.get, self.unk_index
        return [get(w, unk) for w in words]

    def vector(self, word: str) -> np.ndarray:
        return self.weight.data[self.index(word)]

    def lookup(self, words: Sequence[str]) -> ad.Tensor:
        return ad.lookup(self.weight, self.indices(words))

    def coverage(self, words: Iterable[str]) -> float:
        words = set(words)
        if not words:
            return 0.0
        return sum(w in self.vocab for w in words) / len(words)


def load_vectors(path, trainable: bool = False) -> EmbeddingTable:
    """Read a word-vector text file (``word v1 ... vd`` per line).

    A leading ``count dim`` header line, as written by word2vec/fastText,
    is skipped.  For duplicated words the last line wins.
    """
    vecs: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if not parts or parts == [""]:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            word, vals = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in vals])
            except ValueError:
                raise CorpusError(f"non-numeric vector entry for {word!r}", lineno, str(path)) from None
            if dim is None:
                dim = len(vec)
                if dim == 0:
                    raise CorpusError(f"empty vector for {word!r}", lineno, str(path))
            elif len(vec) != dim:
                raise CorpusError(f"vector of length {len(vec)}, expected {dim}", lineno, str(path))
            if word in vecs:
                log.warning("%s:%d: duplicate vector for %r, keeping the last one", path, lineno, word)
            vecs[word] = vec
    words = list(vecs)
    dim = dim or 1
    matrix = np.zeros((len(words) + 1, dim))
    for i, w in enumerate(words):
        matrix[i] = vecs[w]
    return EmbeddingTable(words, matrix, trainable, name=Path(path).stem)


def _rank(pair):
    return (-pair[1], pair[0])


class TranslationTable:
    """Source word -> list of (target word, probability), best first."""

    def __init__(self, entries: dict | None = None):
        self.entries: dict[str, list[tuple[str, float]]] = {}
        for src, pairs in (entries or {}).items():
            for tgt, p in pairs:
                self.add(src, tgt, p)

    def add(self, src: str, tgt: str, prob: float) -> None:
        if not 0.0 <= prob <= 1.0:
            raise ValueError(f"translation probability {prob} for {src!r}->{tgt!r} outside [0, 1]")
        pairs = self.entries.setdefault(src, [])
        pairs.append((tgt, float(prob)))
        pairs.sort(key=_rank)

    def __getitem__(self, src: str) -> list[tuple[str, float]]:
        return self.entries.get(src, [])

    def __contains__(self, src: str) -> bool:
        return src in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def load_translation_table(path) -> TranslationTable:
    table = TranslationTable()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise CorpusError(f"expected 3 tab-separated columns, got {len(cols)}", lineno, str(path))
            try:
                prob = float(cols[2])
            except ValueError:
                raise CorpusError(f"bad probability {cols[2]!r}", lineno, str(path)) from None
            if not 0.0 <= prob <= 1.0:
                raise CorpusError(f"probability {prob} outside [0, 1]", lineno, str(path))
            table.add(cols[0], cols[1], prob)
    return table


@dataclass
class Composition:
    table: EmbeddingTable
    coverage: float


def compose_crosslingual(method: str, source_vocab: Iterable[str],
                         target: EmbeddingTable | None = None,
                         translations: TranslationTable | None = None,
                         premapped: EmbeddingTable | str | Path | None = None,
                         weighting: str = "probability") -> Composition:
    """Build source-language word vectors from target-language ones.

    ``premapped`` loads vectors already living in the shared space;
    ``average`` takes the (probability-weighted, or ``weighting="uniform"``)
    mean over translations present in ``target``; ``argmax`` takes the best
    translation present in ``target``.  Words with no usable translation
    get the UNK row.
    """
    if method not in METHODS:
        raise ValueError(f"unknown composition method {method!r}; choose from {METHODS}")
    source_vocab = list(dict.fromkeys(source_vocab))
    if method == "premapped":
        if premapped is None:
            raise ValueError("premapped composition needs a vector file")
        vectors = premapped if isinstance(premapped, EmbeddingTable) else load_vectors(premapped)
        words = [w for w in source_vocab if w in vectors]
        matrix = np.zeros((len(words) + 1, vectors.dim))
        for i, w in enumerate(words):
            matrix[i] = vectors.vector(w)
        cov = len(words) / len(source_vocab) if source_vocab else 0.0
        log.info("premapped vectors cover %.1f%% of the source vocabulary", 100 * cov)
        return Composition(EmbeddingTable(words, matrix, trainable=False, name="word"), cov)

    if target is None or translations is None:
        raise ValueError(f"{method} composition needs a target table and translations")
    if weighting not in ("probability", "uniform"):
        raise ValueError(f"unknown weighting {weighting!r}")
    words, rows = [], []
    for w in source_vocab:
        usable = [(t, p) for t, p in translations[w] if t in target]
        if not usable:
            continue
        if method == "argmax":
            vec = target.vector(usable[0][0])
        else:
            if weighting == "uniform":
                weights = np.ones(len(usable))
            else:
                weights = np.array([p for _, p in usable])
            if weights.sum() <= 0:
                weights = np.ones(len(usable))
            weights = weights / weights.sum()
            vec = sum(wt * target.vector(t) for (t, _), wt in zip(usable, weights))
        words.append(w)
        rows.append(np.asarray(vec, dtype=np.float64))
    matrix = np.zeros((len(words) + 1, target.dim))
    if rows:
        matrix[:-1] = np.stack(rows)
    cov = len(words) / len(source_vocab) if source_vocab else 0.0
    log.info("%s composition covers %.1f%% of the source vocabulary", method, 100 * cov)
    return Composition(EmbeddingTable(words, matrix, trainable=False, name="word"), cov)


# ------------------------------------------------------------------ encoders

@dataclass
class FeatureTables:
    """All lookup tables feeding one model's input layer.

    ``word`` or ``pos`` is None when that feature is ablated; ``label`` is
    only present for models that read the dependency label in their input.
    ``cue`` is a plain two-row matrix: row 0 for ordinary tokens, row 1
    for cue tokens.
    """
    word: EmbeddingTable | None
    cue: ad.Tensor
    pos: EmbeddingTable | None
    label: EmbeddingTable | None = None

    @property
    def width(self) -> int:
        dims = [t.dim for t in (self.word, self.pos, self.label) if t is not None]
        return sum(dims) + self.cue.shape[1]

    def tables(self) -> dict:
        return {k: t for k, t in (("word", self.word), ("pos", self.pos),
                                  ("label", self.label)) if t is not None}

    def parameters(self) -> dict:
        params = {f"emb.{k}": t.weight for k, t in self.tables().items() if t.trainable}
        params["emb.cue"] = self.cue
        return params


def build_vocab(corpus: Iterable[Sentence], attr: str) -> list[str]:
    counts: dict = defaultdict(int)
    for s in corpus:
        for t in s.tokens:
            counts[getattr(t, attr)] += 1
    return sorted(counts)


def encode_sentence(tokens: Sequence[Token], cue_ids, tables: FeatureTables,
                    with_label: bool = False) -> ad.Tensor:
    """Input matrix, one row per token: word ‖ cue ‖ pos (‖ label)."""
    parts = []
    if tables.word is not None:
        parts.append(tables.word.lookup([t.form for t in tokens]))
    parts.append(ad.lookup(tables.cue, [int(t.id in cue_ids) for t in tokens]))
    if tables.pos is not None:
        parts.append(tables.pos.lookup([t.upos for t in tokens]))
    if with_label:
        if tables.label is None:
            raise ValueError("label embedding requested but no label table present")
        parts.append(tables.label.lookup([t.deprel for t in tokens]))
    return ad.concat(parts, axis=1) if len(parts) > 1 else parts[0]


def encode_token(token: Token, is_cue: bool, tables: FeatureTables,
                 with_label: bool = False) -> ad.Tensor:
    cue_ids = {token.id} if is_cue else set()
    return encode_sentence([token], cue_ids, tables, with_label)[0]
