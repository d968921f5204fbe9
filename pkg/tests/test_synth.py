import numpy as np
import pytest

from negscope.corpus import Annotation, Sentence, parse_corpus, to_instances
from negscope.synth import synth_generate, window_sentence, write_synth


@pytest.mark.parametrize("task", ["subtree", "window"])
def test_thousand_sentences_parse(task, tmp_path):
    path = tmp_path / f"{task}.nsf"
    made = write_synth(path, task, 1000, min_size=3, max_size=12, seed=7)
    back = parse_corpus(path)
    assert len(back) == 1000
    assert [s.sid for s in back] == [s.sid for s in made]
    assert all(len(s.annotations) == 1 for s in back)


def test_equal_seeds_give_identical_bytes(tmp_path):
    a, b = tmp_path / "a.nsf", tmp_path / "b.nsf"
    write_synth(a, "subtree", 200, seed=11)
    write_synth(b, "subtree", 200, seed=11)
    assert a.read_bytes() == b.read_bytes()
    write_synth(b, "subtree", 200, seed=12)
    assert a.read_bytes() != b.read_bytes()


def test_subtree_scope_is_parent_subtree_minus_cue():
    for inst in to_instances(synth_generate("subtree", 300, 3, 10, seed=3)):
        tree = inst.sentence.tree
        (cue,) = inst.cue
        assert not tree.children[cue]
        top = tree.parent[cue]
        want = {v for v in tree.parent if top in tree.ancestors(v)} - {cue}
        assert set(inst.scope) == want
        if top == tree.root:
            assert set(inst.scope) == set(tree.parent) - {cue}


def test_window_with_adjacent_punctuation_is_empty():
    # search seeds until the cue sits between two punctuation marks
    found = 0
    for seed in range(400):
        s = window_sentence(6, np.random.default_rng(seed), 10, "x", punct_rate=0.6)
        (inst,) = s.instances
        (cue,) = inst.cue
        toks = s.tokens
        if 1 < cue < len(toks) and toks[cue - 2].is_punct and toks[cue].is_punct:
            assert inst.scope == frozenset()
            found += 1
    assert found > 0


def test_window_scope_excludes_punctuation():
    for inst in to_instances(synth_generate("window", 200, 3, 12, seed=5)):
        toks = inst.sentence.tokens
        assert not any(toks[i - 1].is_punct for i in inst.scope)
        assert not toks[next(iter(inst.cue)) - 1].is_punct


def test_size_validation():
    with pytest.raises(ValueError):
        synth_generate("subtree", 5, 2, 6)
    with pytest.raises(ValueError):
        synth_generate("subtree", 5, 8, 6)
    with pytest.raises(ValueError, match="unknown"):
        synth_generate("tree", 5)


def test_sizes_in_range():
    sizes = {len(s) for s in synth_generate("subtree", 300, 4, 7, seed=1)}
    assert sizes == {4, 5, 6, 7}
