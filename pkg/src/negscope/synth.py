"""Synthetic NSF corpora whose gold scopes are a known function of the input.

``subtree``: a random dependency tree (uniform random attachment), one
random leaf is the cue, and the scope is the subtree of the cue's head
minus the cue itself.

``window``: a sentence with punctuation sprinkled at random positions;
the scope is every non-punctuation token strictly inside the pair of
punctuation marks (or sentence edges) around the cue.
"""

from __future__ import annotations

import numpy as np

from .corpus import Annotation, Sentence, Token, write_corpus

TASKS = ("subtree", "window")
POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "AUX")
DEPRELS = ("nsubj", "dobj", "amod", "advmod", "det", "case", "nmod", "aux", "conj", "dep")
PUNCT_FORMS = (",", ";", ":", "(", ")", "\"")


def random_heads(n: int, rng: np.random.Generator) -> list[int]:
    """Heads (1-based, 0 = root) of a uniform-random-attachment tree over n tokens."""
    order = rng.permutation(n) + 1
    heads = [0] * (n + 1)
    for k in range(1, n):
        heads[order[k]] = int(order[rng.integers(k)])
    return heads[1:]


def _token(i, head, rng, vocab_size, punct=False):
    if punct:
        form = str(rng.choice(PUNCT_FORMS))
        return Token(i, form, form, "PUNCT", head, "punct")
    w = f"w{int(rng.integers(vocab_size))}"
    return Token(i, w, w, str(rng.choice(POS_TAGS)), head, str(rng.choice(DEPRELS)))


def subtree_sentence(n: int, rng: np.random.Generator, vocab_size: int, sid: str) -> Sentence:
    heads = random_heads(n, rng)
    tokens = tuple(_token(i, h, rng, vocab_size) for i, h in enumerate(heads, start=1))
    has_child = set(heads)
    leaves = [i for i in range(1, n + 1) if i not in has_child]
    cue = int(rng.choice(leaves))
    top = heads[cue - 1]
    children = {i: [] for i in range(1, n + 1)}
    for i, h in enumerate(heads, start=1):
        if h:
            children[h].append(i)
    scope, stack = set(), [top]
    while stack:
        v = stack.pop()
        scope.add(v)
        stack.extend(children[v])
    scope.discard(cue)
    ann = Annotation(frozenset({cue}), frozenset(scope))
    return Sentence(tokens, "synth", sid, (f"# sent_id = {sid}", "# lang = synth"), (ann,))


def window_sentence(n: int, rng: np.random.Generator, vocab_size: int, sid: str,
                    punct_rate: float = 0.25) -> Sentence:
    is_punct = rng.random(n) < punct_rate
    words = np.flatnonzero(~is_punct) + 1
    if len(words) == 0:
        is_punct[int(rng.integers(n))] = False
        words = np.flatnonzero(~is_punct) + 1
    # tree over the words; each punctuation mark hangs off the nearest preceding word
    word_heads = random_heads(len(words), rng)
    heads = [0] * n
    for w, h in zip(words, word_heads):
        heads[w - 1] = int(words[h - 1]) if h else 0
    for i in np.flatnonzero(is_punct) + 1:
        before = words[words < i]
        heads[i - 1] = int(before[-1]) if len(before) else int(words[0])
    tokens = tuple(_token(i, heads[i - 1], rng, vocab_size, bool(is_punct[i - 1]))
                   for i in range(1, n + 1))
    cue = int(rng.choice(words))
    lo = max([i for i in range(1, cue) if is_punct[i - 1]], default=0)
    hi = min([i for i in range(cue + 1, n + 1) if is_punct[i - 1]], default=n + 1)
    scope = frozenset(i for i in range(lo + 1, hi) if not is_punct[i - 1] and i != cue)
    ann = Annotation(frozenset({cue}), scope)
    return Sentence(tokens, "synth", sid, (f"# sent_id = {sid}", "# lang = synth"), (ann,))


def synth_generate(task: str, n: int, min_size: int = 5, max_size: int = 12, vocab_size: int = 50,
                   seed: int = 0, prefix: str | None = None) -> list[Sentence]:
    if task not in TASKS:
        raise ValueError(f"unknown synthetic task {task!r}; choose from {TASKS}")
    if min_size < 3 or max_size < min_size:
        raise ValueError("sentence sizes must satisfy 3 <= min_size <= max_size")
    rng = np.random.default_rng(seed)
    make = subtree_sentence if task == "subtree" else window_sentence
    prefix = prefix or task
    return [make(int(rng.integers(min_size, max_size + 1)), rng, vocab_size, f"{prefix}-{i}")
            for i in range(n)]


def write_synth(path, task: str, n: int, **kw) -> list[Sentence]:
    sentences = synth_generate(task, n, **kw)
    write_corpus(path, sentences)
    return sentences
