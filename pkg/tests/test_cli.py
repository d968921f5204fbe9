import json

import numpy as np
import pytest

from negscope import __version__
from negscope.cli import read_config_file, run_cli, sha256
from negscope.corpus import parse_corpus, to_instances, write_corpus
from negscope.ensemble import read_probabilities, write_probabilities
from negscope.models import load_checkpoint
from negscope.synth import synth_generate

TINY_CFG = "d_w = 4\nd_c = 2\nd_p = 3\nd_l = 3\nd_h = 6\nmax_epochs = 1\n# comment\n"


@pytest.fixture
def files(tmp_path):
    tr, dev = tmp_path / "train.nsf", tmp_path / "dev.nsf"
    write_corpus(tr, synth_generate("subtree", 30, 4, 7, vocab_size=10, seed=1))
    write_corpus(dev, synth_generate("subtree", 10, 4, 7, vocab_size=10, seed=2))
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(TINY_CFG)
    return tmp_path, tr, dev, cfg


def gold_probabilities(path, out):
    rows = []
    for inst in to_instances(parse_corpus(path)):
        for t in inst.sentence.tokens:
            p_in = float(t.id in inst.scope)
            rows.append((inst.sentence.sid, inst.index, t.id, 1 - p_in, p_in))
    write_probabilities(out, rows)


def test_usage_errors_exit_2(capsys):
    assert run_cli([]) == 2
    assert run_cli(["frobnicate"]) == 2
    assert run_cli(["evaluate", "--bogus"]) == 2
    err = capsys.readouterr().err
    assert "usage" in err


def test_verb_help_exits_0(capsys):
    assert run_cli(["train", "--help"]) == 0
    assert "--layers" in capsys.readouterr().out


def test_evaluate_gold_against_itself(files, capsys):
    tmp, tr, dev, _ = files
    pred = tmp / "gold.tsv"
    gold_probabilities(dev, pred)
    out = tmp / "report.txt"
    code = run_cli(["evaluate", "--gold", str(dev), "--pred", str(pred), "--out", str(out),
                    "--easy-hard", "--lca-report", "--diagnostics", str(tmp / "diag.tsv")])
    assert code == 0
    text = capsys.readouterr().out
    assert text.splitlines()[1].split()[:4] == ["100.00", "100.00", "100.00", "100.00"]
    assert "easy" in text and "root" in text
    assert (tmp / "diag.tsv").read_text().startswith("sid\tinstance\tsplit")
    man = json.loads((tmp / "report.txt.manifest.json").read_text())
    assert man["inputs"]["gold"]["sha256"] == sha256(dev)


def test_evaluate_tsv(files, capsys):
    tmp, tr, dev, _ = files
    pred = tmp / "gold.tsv"
    gold_probabilities(dev, pred)
    assert run_cli(["evaluate", "--gold", str(dev), "--pred", str(pred), "--tsv"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "P\tR\tF1\tPCS\tn"


def test_validation_failures_exit_1(files, capsys):
    tmp, tr, dev, _ = files
    bad = tmp / "bad.nsf"
    bad.write_text("1\ta\ta\tX\t2\tdep\n2\tb\tb\tX\t1\tdep\n\n")
    assert run_cli(["strip-punct", "--input", str(bad), "--output", str(tmp / "o.nsf")]) == 1
    assert "cycle" in capsys.readouterr().err
    empty = tmp / "empty.tsv"
    write_probabilities(empty, [])
    assert run_cli(["evaluate", "--gold", str(dev), "--pred", str(empty)]) == 1
    cfg = tmp / "bad.cfg"
    cfg.write_text("no_such_key = 3\n")
    assert run_cli(["train", "--model", "bilstm", "--train", str(tr), "--dev", str(dev),
                    "--out", str(tmp / "m.npz"), "--config", str(cfg)]) == 1
    assert run_cli(["evaluate", "--gold", str(tmp / "missing.nsf"), "--pred", str(empty)]) == 1


def test_train_gcn_defaults_to_four_layers(files):
    tmp, tr, dev, cfg = files
    ck = tmp / "gcn.npz"
    assert run_cli(["train", "--model", "gcn", "--train", str(tr), "--dev", str(dev),
                    "--config", str(cfg), "--out", str(ck)]) == 0
    m = load_checkpoint(ck)
    assert m.config.layers == 4 and m.config.d_h == 6
    assert "gcn3.W_self" in m.weights and "gcn4.W_self" not in m.weights
    assert (tmp / "gcn.log").read_text().startswith("epoch 1 loss ")
    man = json.loads((tmp / "gcn.npz.manifest.json").read_text())
    assert man["command"] == "train" and man["version"] == __version__
    assert man["config"]["model"]["layers"] == 4 and man["seed"] == 1
    assert man["inputs"]["train"]["sha256"] == sha256(tr)


def test_flags_override_config_file(files):
    tmp, tr, dev, cfg = files
    ck = tmp / "g2.npz"
    assert run_cli(["train", "--model", "gcn", "--train", str(tr), "--dev", str(dev),
                    "--config", str(cfg), "--layers", "2", "--hidden", "5", "--out", str(ck)]) == 0
    m = load_checkpoint(ck)
    assert m.config.layers == 2 and m.config.d_h == 5


def test_train_predict_ensemble_evaluate(files, capsys):
    tmp, tr, dev, cfg = files
    for kind in ("bilstm", "dlstm"):
        assert run_cli(["train", "--model", kind, "--train", str(tr), "--dev", str(dev),
                        "--config", str(cfg), "--out", str(tmp / f"{kind}.npz")]) == 0
        assert run_cli(["predict", "--checkpoint", str(tmp / f"{kind}.npz"), "--input", str(dev),
                        "--out", str(tmp / f"{kind}.tsv")]) == 0
    probs = read_probabilities(tmp / "dlstm.tsv")
    assert len(probs) == len(to_instances(parse_corpus(dev)))
    for p in probs.values():
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-6)
    assert run_cli(["ensemble", "--a", str(tmp / "bilstm.tsv"), "--b", str(tmp / "dlstm.tsv"),
                    "--out", str(tmp / "vote.tsv")]) == 0
    lines = (tmp / "vote.tsv").read_text().splitlines()
    assert lines[0] == "sid\tinstance\ttoken\tlabel\twinner\tmargin"
    capsys.readouterr()
    assert run_cli(["evaluate", "--gold", str(dev), "--pred", str(tmp / "vote.tsv")]) == 0
    assert "PCS" in capsys.readouterr().out


def test_rerun_with_same_manifest_gives_same_outputs(files):
    tmp, tr, dev, cfg = files
    args = ["train", "--model", "bilstm", "--train", str(tr), "--dev", str(dev), "--config", str(cfg)]
    assert run_cli(args + ["--out", str(tmp / "a.npz")]) == 0
    assert run_cli(args + ["--out", str(tmp / "b.npz")]) == 0
    a, b = load_checkpoint(tmp / "a.npz"), load_checkpoint(tmp / "b.npz")
    for k, t in a.all_tensors().items():
        assert np.array_equal(t.data, b.all_tensors()[k].data)


def test_predict_with_crosslingual_composition(files, capsys):
    tmp, tr, dev, cfg = files
    words = sorted({t.form for s in parse_corpus(tr) for t in s.tokens})
    rng = np.random.default_rng(0)
    vec = tmp / "en.vec"
    vec.write_text("".join(f"{w} " + " ".join(f"{x:.4f}" for x in rng.normal(size=4)) + "\n"
                           for w in words))
    zh = tmp / "zh.nsf"
    sents = synth_generate("subtree", 5, 4, 7, vocab_size=10, seed=9)
    write_corpus(zh, sents)
    raw = zh.read_text().replace("\tw", "\tz")
    zh.write_text(raw)
    tt = tmp / "tt.tsv"
    tt.write_text("".join(f"z{w[1:]}\t{w}\t0.8\n" for w in words))
    assert run_cli(["train", "--model", "dlstm", "--train", str(tr), "--dev", str(dev),
                    "--config", str(cfg), "--vectors", str(vec), "--out", str(tmp / "x.npz")]) == 0
    assert run_cli(["predict", "--checkpoint", str(tmp / "x.npz"), "--input", str(zh),
                    "--compose", "argmax", "--target-vectors", str(vec),
                    "--translations", str(tt), "--out", str(tmp / "zh.tsv")]) == 0
    assert "coverage 100.0%" in capsys.readouterr().out
    assert run_cli(["predict", "--checkpoint", str(tmp / "x.npz"), "--input", str(zh),
                    "--compose", "average", "--out", str(tmp / "zh2.tsv")]) == 1


def test_strip_punct_verb(tmp_path):
    src = tmp_path / "w.nsf"
    write_corpus(src, synth_generate("window", 20, 5, 9, seed=3))
    out = tmp_path / "np.nsf"
    assert run_cli(["strip-punct", "--input", str(src), "--output", str(out)]) == 0
    assert not any(t.is_punct for s in parse_corpus(out) for t in s.tokens)


def test_synth_verb_is_byte_stable(tmp_path):
    a, b = tmp_path / "a.nsf", tmp_path / "b.nsf"
    for p in (a, b):
        assert run_cli(["synth", "--task", "window", "--n", "50", "--seed", "4",
                        "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads((tmp_path / "a.nsf.manifest.json").read_text())["seed"] == 4


def test_gradcheck_verb(capsys):
    assert run_cli(["gradcheck", "--model", "dlstm", "--trials", "20", "--tol", "1e-4"]) == 0
    assert "dlstm: pass" in capsys.readouterr().out


def test_config_file_parser(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# x\n\nlr = 0.01\nselect=pcs\n")
    assert read_config_file(p) == {"lr": "0.01", "select": "pcs"}
