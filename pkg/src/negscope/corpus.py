"""Reading, validating and writing negation-annotated dependency corpora.

The on-disk format (NSF) is a CoNLL-like TSV::

    # lang = en
    # sent_id = wisteria-12
    1   You     you     PRON    4   nsubj   _   S
    2   must    must    AUX     4   aux     _   _
    3   not     not     PART    4   neg     C   _
    4   drive   drive   VERB    0   root    _   S

Six fixed columns (ID FORM LEMMA UPOS HEAD DEPREL) are followed by one
CUE/SCOPE column pair per negation instance.  Sentences are separated by
a blank line.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

PUNCT_TAGS = frozenset({"PUNCT", "."})
N_FIXED = 6


class CorpusError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        self.message = message
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class TreeError(CorpusError):
    pass


@dataclass(frozen=True)
class Token:
    id: int
    form: str
    lemma: str
    upos: str
    head: int
    deprel: str

    @property
    def is_punct(self) -> bool:
        return self.upos in PUNCT_TAGS


@dataclass(frozen=True)
class Annotation:
    """Raw cue/scope columns of one negation instance (token-id sets)."""
    cue: frozenset
    scope: frozenset


@dataclass(frozen=True, eq=False)
class Sentence:
    tokens: tuple
    lang: str = ""
    sid: str = ""
    comments: tuple = ()
    annotations: tuple = ()

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, i: int) -> Token:
        return self.tokens[i - 1]

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @cached_property
    def tree(self) -> "DependencyTree":
        return build_tree(self)

    @property
    def instances(self) -> list["NegationInstance"]:
        return [NegationInstance(self, a.cue, a.scope, i) for i, a in enumerate(self.annotations)]


@dataclass(frozen=True, eq=False)
class NegationInstance:
    sentence: Sentence
    cue: frozenset
    scope: frozenset
    index: int = 0

    def __post_init__(self):
        if not self.cue:
            raise CorpusError(f"instance {self.key} has an empty cue")
        n = len(self.sentence)
        bad = [i for i in self.cue | self.scope if not 1 <= i <= n]
        if bad:
            raise CorpusError(f"instance {self.key} refers to missing tokens {sorted(bad)}")
        if self.cue & self.scope:
            raise CorpusError(f"instance {self.key}: cue and scope overlap")

    @property
    def key(self) -> tuple:
        return (self.sentence.sid, self.index)

    def labels(self) -> list[int]:
        """Per-token gold labels, 1 = in scope."""
        return [int(t.id in self.scope) for t in self.sentence.tokens]


@dataclass
class DependencyTree:
    root: int
    parent: dict
    children: dict
    label: dict

    def __len__(self) -> int:
        return len(self.parent)

    def nodes(self) -> list[int]:
        return sorted(self.parent)

    def preorder(self) -> list[int]:
        out, stack = [], [self.root]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children[v]))
        return out

    def postorder(self) -> list[int]:
        return self.preorder()[::-1]

    def depth(self, v: int) -> int:
        d = 0
        while self.parent[v] != 0:
            v = self.parent[v]
            d += 1
        return d

    def ancestors(self, v: int) -> list[int]:
        """``v`` followed by its ancestors up to the root."""
        path = [v]
        while self.parent[v] != 0:
            v = self.parent[v]
            path.append(v)
        return path

    def distance(self, u: int, v: int) -> int:
        up = {w: i for i, w in enumerate(self.ancestors(u))}
        for j, w in enumerate(self.ancestors(v)):
            if w in up:
                return up[w] + j
        raise TreeError(f"nodes {u} and {v} are not connected")

    def lca(self, nodes: Iterable[int]) -> int:
        nodes = list(nodes)
        if not nodes:
            raise ValueError("lca of an empty set")
        best = nodes[0]
        for v in nodes[1:]:
            a, b = best, v
            da, db = self.depth(a), self.depth(b)
            while da > db:
                a, da = self.parent[a], da - 1
            while db > da:
                b, db = self.parent[b], db - 1
            while a != b:
                a, b = self.parent[a], self.parent[b]
            best = a
        return best


def _check_heads(tokens: Sequence[Token], line: int | None = None) -> None:
    n = len(tokens)
    for t in tokens:
        if t.head == t.id:
            raise TreeError(f"token {t.id} is its own head", line)
        if not 0 <= t.head <= n:
            raise TreeError(f"token {t.id} has head {t.head} outside 0..{n}", line)
    heads = {t.id: t.head for t in tokens}
    state = {}
    for start in heads:
        path = []
        v = start
        while v != 0 and state.get(v) is None:
            state[v] = start
            path.append(v)
            v = heads[v]
        if v != 0 and state.get(v) == start:
            cyc = path[path.index(v):]
            raise TreeError("cycle in heads: " + " -> ".join(map(str, cyc + [v])), line)
        for u in path:
            state[u] = -1
    roots = [t.id for t in tokens if t.head == 0]
    if len(roots) != 1:
        raise TreeError(f"expected exactly one root, found {len(roots)} ({roots})", line)


def build_tree(sentence: Sentence) -> DependencyTree:
    _check_heads(sentence.tokens)
    parent, label = {}, {}
    children = {t.id: [] for t in sentence.tokens}
    root = 0
    for t in sentence.tokens:
        parent[t.id] = t.head
        label[t.id] = t.deprel
        if t.head == 0:
            root = t.id
        else:
            children[t.head].append(t.id)
    return DependencyTree(root, parent, children, label)


def _parse_int(text: str, what: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise CorpusError(f"non-integer {what} {text!r}", line) from None


def _finish_block(rows, comments, start_line, index, default_lang, source):
    n_cols = len(rows[0][1])
    for lineno, cols in rows:
        if len(cols) != n_cols:
            raise CorpusError(f"ragged block: {len(cols)} columns, expected {n_cols}", lineno)
    if n_cols < N_FIXED or (n_cols - N_FIXED) % 2:
        raise CorpusError(f"bad column count {n_cols}; need 6 + 2k", rows[0][0])
    tokens = []
    for pos, (lineno, cols) in enumerate(rows, start=1):
        tid = _parse_int(cols[0], "ID", lineno)
        if tid != pos:
            raise CorpusError(f"token id {tid}, expected {pos}", lineno)
        head = _parse_int(cols[4], "HEAD", lineno)
        if not 0 <= head <= len(rows):
            raise CorpusError(f"head {head} out of range 0..{len(rows)}", lineno)
        tokens.append(Token(tid, cols[1], cols[2], cols[3], head, cols[5]))
    _check_heads(tokens, start_line)

    meta = {}
    for c in comments:
        body = c[1:].strip()
        if "=" in body:
            k, v = body.split("=", 1)
            meta[k.strip()] = v.strip()
    n_inst = (n_cols - N_FIXED) // 2
    annotations = []
    for k in range(n_inst):
        cue, scope = set(), set()
        for lineno, cols in rows:
            c, s = cols[N_FIXED + 2 * k], cols[N_FIXED + 2 * k + 1]
            if c not in ("C", "_") or s not in ("S", "_"):
                raise CorpusError(f"instance {k}: bad cue/scope marks {c!r} {s!r}", lineno)
            tid = int(cols[0])
            if c == "C":
                cue.add(tid)
            if s == "S":
                scope.add(tid)
        if not cue:
            raise CorpusError(f"instance {k} has no cue token", start_line)
        overlap = cue & scope
        if overlap:
            log.warning("%s line %d: instance %d has cue tokens %s in scope; dropped from scope",
                        source, start_line, k, sorted(overlap))
            scope -= overlap
        annotations.append(Annotation(frozenset(cue), frozenset(scope)))
    sid = meta.get("sent_id", f"{Path(str(source)).stem}-{index}")
    return Sentence(tuple(tokens), meta.get("lang", default_lang), sid, tuple(comments),
                    tuple(annotations))


def parse_lines(lines: Iterable[str], source: str = "<string>", lang: str = "") -> list[Sentence]:
    sentences = []
    rows, comments, start = [], [], None
    lineno = 0
    try:
        for lineno, raw in enumerate(lines, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                if rows:
                    sentences.append(_finish_block(rows, comments, start, len(sentences), lang, source))
                elif comments:
                    raise CorpusError("comment block without tokens", lineno)
                rows, comments, start = [], [], None
                continue
            if start is None:
                start = lineno
            if line.startswith("#"):
                if rows:
                    raise CorpusError("comment inside a token block", lineno)
                comments.append(line)
            else:
                rows.append((lineno, line.split("\t")))
        if rows:
            sentences.append(_finish_block(rows, comments, start, len(sentences), lang, source))
        elif comments:
            raise CorpusError("comment block without tokens", lineno)
    except CorpusError as err:
        if err.path is None:
            raise type(err)(err.message, err.line, source) from None
        raise
    return sentences


def parse_corpus(path, lang: str = "") -> list[Sentence]:
    """Parse an NSF file; ``lang`` is used where a block lacks ``# lang``."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        sentences = parse_lines(fh, str(path), lang)
    n_inst = sum(len(s.annotations) for s in sentences)
    log.info("%s: %d sentences, %d negation instances", path, len(sentences), n_inst)
    return sentences


def parse_string(text: str, lang: str = "") -> list[Sentence]:
    return parse_lines(text.splitlines(), "<string>", lang)


def format_sentence(sentence: Sentence) -> str:
    lines = list(sentence.comments)
    for t in sentence.tokens:
        cols = [str(t.id), t.form, t.lemma, t.upos, str(t.head), t.deprel]
        for a in sentence.annotations:
            cols.append("C" if t.id in a.cue else "_")
            cols.append("S" if t.id in a.scope else "_")
        lines.append("\t".join(cols))
    return "\n".join(lines) + "\n"


def serialize(sentences: Iterable[Sentence]) -> str:
    return "".join(format_sentence(s) + "\n" for s in sentences)


def write_corpus(path, sentences: Iterable[Sentence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(sentences))


def to_instances(corpus: Iterable[Sentence]) -> list[NegationInstance]:
    out = []
    for s in corpus:
        out.extend(s.instances)
    return out


def strip_language_specific_labels(sentence: Sentence) -> Sentence:
    """Truncate subtyped relations, e.g. ``conj:and`` becomes ``conj``."""
    tokens = tuple(replace(t, deprel=t.deprel.split(":", 1)[0]) if ":" in t.deprel else t
                   for t in sentence.tokens)
    return replace(sentence, tokens=tokens)


def strip_punctuation(sentence: Sentence) -> Sentence | None:
    """Delete punctuation tokens, reattaching their dependents and renumbering.

    Dependents of a removed token move to its nearest non-punctuation
    ancestor.  If the root itself is punctuation, its first non-punctuation
    dependent (transitively) becomes the new root.  Punctuation is dropped
    from cue and scope sets; an instance whose cue disappears is dropped.
    Returns None when nothing but punctuation remains.
    """
    keep = [t for t in sentence.tokens if not t.is_punct]
    if len(keep) == len(sentence.tokens):
        return sentence
    if not keep:
        return None
    heads = {t.id: t.head for t in sentence.tokens}
    punct = {t.id for t in sentence.tokens if t.is_punct}

    def lift(h):
        while h in punct:
            h = heads[h]
        return h

    new_head = {t.id: lift(t.head) for t in keep}
    roots = [i for i, h in new_head.items() if h == 0]
    if len(roots) > 1:
        # punctuation root: promote the first surviving dependent
        promoted = roots[0]
        for i in roots[1:]:
            new_head[i] = promoted
    renum = {t.id: k for k, t in enumerate(keep, start=1)}
    renum[0] = 0
    tokens = tuple(replace(t, id=renum[t.id], head=renum[new_head[t.id]]) for t in keep)
    annotations = []
    for a in sentence.annotations:
        cue = frozenset(renum[i] for i in a.cue if i not in punct)
        if not cue:
            log.warning("sentence %s: cue consists of punctuation only; instance dropped",
                        sentence.sid)
            continue
        scope = frozenset(renum[i] for i in a.scope if i not in punct)
        annotations.append(Annotation(cue, scope))
    return replace(sentence, tokens=tokens, annotations=tuple(annotations))


def strip_punctuation_corpus(corpus: Iterable[Sentence]) -> list[Sentence]:
    out = []
    for s in corpus:
        t = strip_punctuation(s)
        if t is not None:
            out.append(t)
    return out


def corpus_stats(corpus: Sequence[Sentence]) -> dict:
    return {
        "sentences": len(corpus),
        "tokens": sum(len(s) for s in corpus),
        "instances": sum(len(s.annotations) for s in corpus),
    }
