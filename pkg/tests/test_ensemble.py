import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from negscope.ensemble import (confidence_vote, read_probabilities, vote_files,
                               write_probabilities)


def test_more_confident_model_wins():
    v = confidence_vote([[0.6, 0.4]], [[0.1, 0.9]])
    assert v.winner[0] == 1 and v.labels[0] == 1
    assert v.margin[0] == pytest.approx(0.8)


def test_exact_tie_goes_to_first_model():
    v = confidence_vote([[0.3, 0.7]], [[0.3, 0.7]])
    assert v.winner[0] == 0 and v.labels[0] == 1


def test_agreeing_models_keep_their_label():
    v = confidence_vote([[0.2, 0.8], [0.9, 0.1]], [[0.45, 0.55], [0.6, 0.4]])
    assert list(v.labels) == [1, 0]


def test_length_mismatch():
    with pytest.raises(ValueError):
        confidence_vote([[0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]])


def test_scope_is_one_based():
    v = confidence_vote([[0.1, 0.9], [0.9, 0.1], [0.2, 0.8]], [[0.5, 0.5]] * 3)
    assert v.scope() == {1, 3}


def random_pairs(rng, n):
    # mix continuous draws with values on a coarse grid so exact ties occur
    p = np.where(rng.random(n) < 0.3, rng.integers(0, 11, n) / 10, rng.random(n))
    return np.stack([1 - p, p], axis=1)


def test_vote_algebra_on_random_pairs():
    rng = np.random.default_rng(0)
    a, b = random_pairs(rng, 1000), random_pairs(rng, 1000)
    v = confidence_vote(a, b)
    ab = confidence_vote(b, a)
    ma, mb = np.abs(a[:, 1] - a[:, 0]), np.abs(b[:, 1] - b[:, 0])
    arg_a, arg_b = (a[:, 1] > a[:, 0]).astype(int), (b[:, 1] > b[:, 0]).astype(int)
    ties = ma == mb
    assert ties.sum() > 0
    for i in range(1000):
        if arg_a[i] == arg_b[i]:
            assert v.labels[i] == arg_a[i]
        if ties[i]:
            assert v.winner[i] == 0 and v.labels[i] == arg_a[i]
            assert ab.labels[i] == arg_b[i]
        else:
            assert v.winner[i] == int(mb[i] > ma[i])
            assert v.labels[i] == ab.labels[i]
        assert v.margin[i] == max(ma[i], mb[i])
        assert 0.0 <= v.margin[i] <= 1.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=20))
def test_vote_never_worse_than_both_where_they_agree(pairs):
    a = np.array([[1 - p, p] for p, _ in pairs])
    b = np.array([[1 - q, q] for _, q in pairs])
    gold = np.array([int(p > 0.5) for p, _ in pairs])
    v = confidence_vote(a, b)
    la, lb = a[:, 1] > a[:, 0], b[:, 1] > b[:, 0]
    agree = la == lb
    acc = lambda lab: (lab[agree] == gold[agree]).mean() if agree.any() else 1.0
    assert acc(v.labels.astype(bool)) >= min(acc(la), acc(lb))


def test_probability_file_round_trip(tmp_path):
    rows = [("s1", 0, 1, 0.25, 0.75), ("s1", 0, 2, 0.5, 0.5), ("s2", 1, 1, 1.0, 0.0)]
    path = tmp_path / "p.tsv"
    write_probabilities(path, rows)
    assert path.read_text().splitlines()[0] == "sid\tinstance\ttoken\tp_out\tp_in"
    back = read_probabilities(path)
    np.testing.assert_array_equal(back[("s1", 0)], [[0.25, 0.75], [0.5, 0.5]])
    votes = vote_files(path, path)
    assert votes[("s1", 0)].scope() == {1}


def test_probability_file_errors(tmp_path):
    bad = tmp_path / "b.tsv"
    bad.write_text("sid\tinstance\ttoken\tp_out\tp_in\ns\t0\t2\t0.5\t0.5\n")
    with pytest.raises(ValueError, match="token ids"):
        read_probabilities(bad)
    bad.write_text("s\t0\t1\t0.5\n")
    with pytest.raises(ValueError, match="5 columns"):
        read_probabilities(bad)
