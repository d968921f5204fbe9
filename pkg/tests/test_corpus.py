import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from negscope.corpus import (CorpusError, Sentence, Token, TreeError, build_tree, corpus_stats,
                             parse_corpus, parse_string, serialize, strip_language_specific_labels,
                             strip_punctuation, to_instances, write_corpus)
from negscope.synth import random_heads, synth_generate

from conftest import FIG1, nsf


def test_three_token_block_with_one_instance():
    text = nsf([("Not", "PART", 2, "neg", "C", "_"),
                ("here", "ADV", 0, "root", "_", "S"),
                ("now", "ADV", 2, "advmod", "_", "S")])
    sents = parse_string(text)
    assert len(sents) == 1
    insts = to_instances(sents)
    assert len(insts) == 1
    assert insts[0].cue == {1} and insts[0].scope == {2, 3}
    assert sents[0].lang == "en" and sents[0].sid == "s1"


def test_two_cycle_is_reported_with_line_number():
    text = nsf([("a", "X", 2, "dep"), ("b", "X", 1, "dep"), ("c", "X", 0, "root")])
    with pytest.raises(TreeError) as err:
        parse_string(text)
    assert "cycle" in str(err.value)
    assert "1" in str(err.value) and "2" in str(err.value)
    assert err.value.line is not None


@pytest.mark.parametrize("rows, fragment", [
    ([("a", "X", 0, "root", "C", "_"), ("b", "X", 1, "dep")], "ragged"),
    ([("a", "X", "x", "root")], "non-integer"),
    ([("a", "X", 0, "root"), ("b", "X", 7, "dep")], "out of range"),
    ([("a", "X", 0, "root"), ("b", "X", 0, "root")], "root"),
    ([("a", "X", 1, "root")], "its own head"),
])
def test_invalid_blocks_raise_with_line(rows, fragment):
    with pytest.raises(CorpusError, match=fragment) as err:
        parse_string(nsf(rows))
    assert err.value.line is not None


def test_error_line_number_points_at_bad_row():
    text = nsf([("a", "X", 0, "root")]) + nsf([("a", "X", 0, "root"), ("b", "X", "q", "dep")])
    with pytest.raises(CorpusError) as err:
        parse_string(text)
    # block 1 is 4 lines (2 comments, 1 token, blank); bad row is line 8
    assert err.value.line == 8


def test_overlap_of_cue_and_scope_is_removed(caplog):
    text = nsf([("no", "DET", 2, "det", "C", "S"), ("way", "NOUN", 0, "root", "_", "S")])
    with caplog.at_level("WARNING"):
        inst = to_instances(parse_string(text))[0]
    assert inst.scope == {2}
    assert "cue tokens" in caplog.text


def test_instance_count_and_order():
    text = nsf([("not", "PART", 2, "neg", "C", "_", "_", "S"),
                ("this", "PRON", 0, "root", "_", "S", "_", "_"),
                ("never", "ADV", 2, "advmod", "_", "_", "C", "_")])
    text += nsf([("plain", "ADJ", 0, "root")], comments=("# sent_id = s2",))
    sents = parse_string(text)
    insts = to_instances(sents)
    assert [i.key for i in insts] == [("s1", 0), ("s1", 1)]
    assert len(sents[1].annotations) == 0
    assert sum(len(s.annotations) for s in sents) == len(insts)
    assert corpus_stats(sents) == {"sentences": 2, "tokens": 4, "instances": 2}


def test_strip_language_specific_labels():
    text = nsf([("a", "X", 0, "root"), ("b", "X", 1, "conj:and"), ("c", "X", 1, "nmod:prep"),
                ("d", "X", 1, "nsubj")])
    s = strip_language_specific_labels(parse_string(text)[0])
    assert [t.deprel for t in s.tokens] == ["root", "conj", "nmod", "nsubj"]


def test_fig1_tree(fig1):
    tree = fig1.tree
    assert fig1.token(tree.root).form == "drive"
    kids = {fig1.token(k).form for k in tree.children[tree.root]}
    assert {"You", "must", "not"} <= kids
    assert 8 in tree.children[tree.root]          # dangerous heads its own subtree
    assert tree.children[8] == [5, 6, 7]


def test_single_token_and_chain():
    single = parse_string(nsf([("a", "X", 0, "root")]))[0].tree
    assert single.root == 1 and single.children[1] == []
    chain = parse_string(nsf([("a", "X", 2, "dep"), ("b", "X", 3, "dep"),
                              ("c", "X", 0, "root")]))[0].tree
    assert chain.root == 3 and chain.depth(1) == 2 and chain.parent == {1: 2, 2: 3, 3: 0}


def test_tree_helpers(fig1):
    t = fig1.tree
    assert t.lca([1]) == 1
    assert t.lca([5, 6]) == 8 and t.lca([6, 5]) == 8
    assert t.lca([1, 6]) == 4
    assert t.distance(1, 6) == 3
    assert t.preorder()[0] == 4 and t.postorder()[-1] == 4


def test_round_trip_canonical(tmp_path):
    text = FIG1 + nsf([("x", "PUNCT", 0, "root")], comments=("# sent_id = 2", "# lang = zh",
                                                               "# note = kept verbatim"))
    assert serialize(parse_string(text)) == text
    path = tmp_path / "c.nsf"
    path.write_text(text, encoding="utf-8")
    out = tmp_path / "d.nsf"
    write_corpus(out, parse_corpus(path))
    assert out.read_bytes() == path.read_bytes()


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), task=st.sampled_from(["subtree", "window"]))
def test_round_trip_and_edge_count_on_random_corpora(seed, task):
    sents = synth_generate(task, 5, 3, 15, seed=seed)
    text = serialize(sents)
    again = parse_string(text)
    assert serialize(again) == text
    for s in again:
        tree = s.tree
        assert sum(len(c) for c in tree.children.values()) == len(s) - 1
        for v, p in tree.parent.items():
            assert p == 0 or v in tree.children[p]


def test_children_ordered_by_id():
    rng = np.random.default_rng(3)
    for n in range(2, 20):
        heads = random_heads(n, rng)
        toks = tuple(Token(i, "w", "w", "X", h, "dep") for i, h in enumerate(heads, start=1))
        tree = build_tree(Sentence(toks))
        for kids in tree.children.values():
            assert kids == sorted(kids)


def test_punct_flag():
    assert Token(1, ",", ",", "PUNCT", 0, "punct").is_punct
    assert Token(1, ",", ",", ".", 0, "punct").is_punct
    assert not Token(1, "a", "a", "DET", 0, "det").is_punct


# ----------------------------------------------------------- punctuation

def test_strip_punct_without_punct_is_identity(fig1):
    assert strip_punctuation(fig1) is fig1


def test_strip_leaf_punct_renumbers_and_keeps_tree():
    s = parse_string(nsf([("I", "PRON", 2, "nsubj", "_", "S"),
                          ("do", "AUX", 0, "root", "_", "S"),
                          (",", "PUNCT", 2, "punct", "_", "_"),
                          ("not", "PART", 2, "neg", "C", "_"),
                          ("go", "VERB", 2, "xcomp", "_", "S")]))[0]
    out = strip_punctuation(s)
    assert [t.form for t in out.tokens] == ["I", "do", "not", "go"]
    assert [t.head for t in out.tokens] == [2, 0, 2, 2]
    assert out.annotations[0].cue == {3} and out.annotations[0].scope == {1, 2, 4}
    build_tree(out)


def test_strip_punct_reattaches_dependents_and_promotes_root():
    s = parse_string(nsf([("a", "X", 2, "dep", "C", "_"),
                          (":", "PUNCT", 0, "root", "_", "_"),
                          ("b", "X", 2, "dep", "_", "S"),
                          ("c", "X", 3, "dep", "_", "S")]))[0]
    out = strip_punctuation(s)
    assert [t.head for t in out.tokens] == [0, 1, 2]
    build_tree(out)


def test_strip_punct_drops_punct_only_cue(caplog):
    s = parse_string(nsf([("a", "X", 0, "root", "_", "S"), ("!", "PUNCT", 1, "punct", "C", "_")]))[0]
    with caplog.at_level("WARNING"):
        out = strip_punctuation(s)
    assert out.annotations == ()
