"""Command-line entry point: ``negscope <verb> [options]``.

Exit status is 0 on success, 1 when inputs fail validation (or a check
fails) and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (CorpusError, parse_corpus, strip_language_specific_labels,
                     strip_punctuation_corpus, to_instances, write_corpus)
from .embeddings import compose_crosslingual, load_translation_table, load_vectors
from .ensemble import read_probabilities, vote_files, write_probabilities
from .evaluation import (diagnostics, easy_hard_report, evaluate, format_lca, format_report,
                         format_table, lca_environment_report)
from .models import ModelConfig, add_word_vectors, build_model, load_checkpoint
from .synth import TASKS, synth_generate
from .training import TrainConfig, ablate_grid, train

log = logging.getLogger("negscope")

MODEL_KEYS = {f.name: f.type for f in fields(ModelConfig)}
TRAIN_KEYS = {f.name: f.type for f in fields(TrainConfig)}


class ValidationFailure(Exception):
    pass


# ------------------------------------------------------------------ config

def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment line."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationFailure(f"{path}:{lineno}: expected key = value")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _coerce(value: str, example):
    if isinstance(example, bool):
        if str(value).lower() in ("1", "true", "yes", "on"):
            return True
        if str(value).lower() in ("0", "false", "no", "off"):
            return False
        raise ValidationFailure(f"not a boolean: {value!r}")
    if isinstance(example, int):
        return int(value)
    if isinstance(example, float) or example is None:
        return None if str(value).lower() == "none" else float(value)
    return str(value)


def resolve_configs(args) -> tuple[ModelConfig, TrainConfig]:
    raw = read_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(raw) - set(MODEL_KEYS) - set(TRAIN_KEYS)
    if unknown:
        raise ValidationFailure(f"unknown config keys: {sorted(unknown)}")
    for key in list(MODEL_KEYS) + list(TRAIN_KEYS):
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    m_def, t_def = ModelConfig(), TrainConfig()
    mkw = {k: _coerce(v, getattr(m_def, k)) if isinstance(v, str) else v
           for k, v in raw.items() if k in MODEL_KEYS}
    tkw = {k: _coerce(v, getattr(t_def, k)) if isinstance(v, str) else v
           for k, v in raw.items() if k in TRAIN_KEYS}
    try:
        return ModelConfig(**mkw), TrainConfig(**tkw)
    except (TypeError, ValueError) as err:
        raise ValidationFailure(str(err)) from None


# ---------------------------------------------------------------- manifest

def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_path, argv, config: dict, inputs: dict, outputs: dict, seed=None) -> Path:
    manifest = {
        "command": argv[0] if argv else "",
        "argv": list(argv),
        "config": config,
        "seed": seed,
        "inputs": {k: {"path": str(p), "sha256": sha256(p)} for k, p in inputs.items() if p},
        "outputs": {k: str(p) for k, p in outputs.items() if p},
        "version": __version__,
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ------------------------------------------------------------------- verbs

def _load(path, strip_labels=False):
    sents = parse_corpus(path)
    if strip_labels:
        sents = [strip_language_specific_labels(s) for s in sents]
    return sents


def cmd_train(args, argv) -> int:
    mc, tc = resolve_configs(args)
    train_sents = _load(args.train, args.strip_labels)
    dev_sents = _load(args.dev, args.strip_labels)
    pretrained = load_vectors(args.vectors) if args.vectors else None
    out = Path(args.out)
    log_path = Path(args.log) if args.log else out.with_suffix(".log")
    res = train(args.model, train_sents, dev_sents, mc, tc, pretrained,
                log_path=log_path, checkpoint_path=out)
    print(f"best epoch {res.best_epoch} dev {tc.select} {res.best_metric:.2f}")
    write_manifest(out, argv, {"model": asdict(mc), "train": asdict(tc), "kind": args.model},
                   {"train": args.train, "dev": args.dev, "vectors": args.vectors},
                   {"checkpoint": out, "log": log_path}, tc.seed)
    return 0


def _prob_rows(model, instances):
    for inst in instances:
        probs = model.predict_proba(inst)
        for tid, (p_out, p_in) in enumerate(probs, start=1):
            yield inst.sentence.sid, inst.index, tid, float(p_out), float(p_in)


def cmd_predict(args, argv) -> int:
    model = load_checkpoint(args.checkpoint)
    sents = _load(args.input, args.strip_labels)
    if args.compose:
        vocab = sorted({t.form for s in sents for t in s.tokens})
        if args.compose == "premapped":
            comp = compose_crosslingual("premapped", vocab, premapped=args.premapped)
        else:
            if not (args.target_vectors and args.translations):
                raise ValidationFailure("--compose needs --target-vectors and --translations")
            comp = compose_crosslingual(args.compose, vocab, load_vectors(args.target_vectors),
                                        load_translation_table(args.translations),
                                        weighting=args.weighting)
        added = add_word_vectors(model, comp.table)
        print(f"composed vectors: coverage {100 * comp.coverage:.1f}%, {added} words added")
    insts = to_instances(sents)
    write_probabilities(args.out, _prob_rows(model, insts))
    write_manifest(args.out, argv, {"compose": args.compose},
                   {"checkpoint": args.checkpoint, "input": args.input}, {"probabilities": args.out})
    return 0


LABEL_HEADER = "sid\tinstance\ttoken\tlabel\twinner\tmargin"


def cmd_ensemble(args, argv) -> int:
    votes = vote_files(args.a, args.b)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(LABEL_HEADER + "\n")
        for (sid, k), v in votes.items():
            for tid in range(len(v.labels)):
                fh.write(f"{sid}\t{k}\t{tid + 1}\t{int(v.labels[tid])}\t{'AB'[v.winner[tid]]}"
                         f"\t{v.margin[tid]:.9g}\n")
    write_manifest(args.out, argv, {}, {"a": args.a, "b": args.b}, {"labels": args.out})
    return 0


def read_predictions(path) -> dict:
    """Map (sid, instance) -> predicted scope from a probability or label TSV."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
    if header == LABEL_HEADER:
        scopes: dict = {}
        with open(path, encoding="utf-8") as fh:
            next(fh)
            for line in fh:
                cols = line.rstrip("\n").split("\t")
                if len(cols) != 6:
                    raise ValidationFailure(f"{path}: bad label row {line!r}")
                key = (cols[0], int(cols[1]))
                scopes.setdefault(key, set())
                if cols[3] == "1":
                    scopes[key].add(int(cols[2]))
        return {k: frozenset(v) for k, v in scopes.items()}
    probs = read_probabilities(path)
    return {k: frozenset(int(i) + 1 for i in np.flatnonzero(p[:, 1] > p[:, 0]))
            for k, p in probs.items()}


def cmd_evaluate(args, argv) -> int:
    insts = to_instances(_load(args.gold))
    preds_by_key = read_predictions(args.pred)
    missing = [i.key for i in insts if i.key not in preds_by_key]
    if missing:
        raise ValidationFailure(f"no predictions for {len(missing)} instances, e.g. {missing[:3]}")
    preds = [preds_by_key[i.key] - i.cue for i in insts]
    report = evaluate(insts, preds, macro=args.macro)
    parts = [format_report(report, args.tsv)]
    if args.easy_hard:
        eh = easy_hard_report(insts, preds)
        parts.append(format_table(["split", "n", "P", "R", "F1", "PCS"],
                                  [[k, r.instances, r.precision, r.recall, r.f1, r.pcs]
                                   for k, r in eh.items()], args.tsv))
    if args.lca_report:
        parts.append(format_lca(lca_environment_report(insts, preds), args.tsv))
    text = "\n".join(parts)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    if args.diagnostics:
        Path(args.diagnostics).write_text(diagnostics(insts, preds), encoding="utf-8")
    if args.out:
        write_manifest(args.out, argv, {"macro": args.macro},
                       {"gold": args.gold, "pred": args.pred}, {"report": args.out})
    return 0


def cmd_ablate(args, argv) -> int:
    mc, tc = resolve_configs(args)
    res = ablate_grid(_load(args.train, args.strip_labels), _load(args.dev, args.strip_labels),
                      _load(args.test, args.strip_labels), mc, tc, structured=args.structured)
    text = res.table(args.tsv)
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        write_manifest(args.out, argv, {"model": asdict(mc), "train": asdict(tc)},
                       {"train": args.train, "dev": args.dev, "test": args.test},
                       {"table": args.out}, tc.seed)
    return 0


def cmd_strip_punct(args, argv) -> int:
    sents = strip_punctuation_corpus(parse_corpus(args.input))
    write_corpus(args.output, sents)
    write_manifest(args.output, argv, {}, {"input": args.input}, {"output": args.output})
    return 0


def cmd_gradcheck(args, argv) -> int:
    from .gradcheck import check_model
    kinds = ["bilstm", "dlstm", "gcn"] if args.model == "all" else [args.model]
    ok = True
    for kind in kinds:
        start = time.perf_counter()
        res = check_model(kind, trials=args.trials, tol=args.tol, eps=args.eps, seed=args.seed,
                          min_size=args.min_size, max_size=args.max_size, layers=args.layers,
                          max_entries=args.max_entries)
        status = "pass" if res.passed else "FAIL"
        print(f"{kind}: {status} max_rel_err {res.max_rel_error:.3e} ({res.worst}) "
              f"entries {res.entries} time {time.perf_counter() - start:.1f}s")
        ok &= res.passed
    return 0 if ok else 1


def cmd_synth(args, argv) -> int:
    sents = synth_generate(args.task, args.n, args.min_size, args.max_size, args.vocab, args.seed)
    write_corpus(args.out, sents)
    write_manifest(args.out, argv, {"task": args.task, "n": args.n, "min_size": args.min_size,
                                    "max_size": args.max_size, "vocab": args.vocab},
                   {}, {"corpus": args.out}, args.seed)
    return 0


# ------------------------------------------------------------------ parser

def _add_config_flags(p):
    g = p.add_argument_group("model / training configuration (override --config)")
    g.add_argument("--config", help="flat key=value configuration file")
    g.add_argument("--layers", type=int, help="GCN layers (default 4)")
    g.add_argument("--hidden", dest="d_h", type=int, help="hidden size d_h")
    for name in ("d_w", "d_c", "d_p", "d_l"):
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=int)
    g.add_argument("--dropout", type=float)
    g.add_argument("--neighbor-dropout", dest="neighbor_dropout", type=float)
    g.add_argument("--pre-encoder", dest="pre_encoder", choices=["dense", "bilstm"])
    g.add_argument("--gcn-form", dest="gcn_form", choices=["weighted", "bias"])
    g.add_argument("--no-injection", dest="injection", action="store_const", const=False)
    g.add_argument("--no-word", dest="use_word", action="store_const", const=False)
    g.add_argument("--no-pos", dest="use_pos", action="store_const", const=False)
    g.add_argument("--precision", choices=["float32", "float64"])
    g.add_argument("--seed", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--epochs", dest="max_epochs", type=int)
    g.add_argument("--patience", type=int)
    g.add_argument("--select", choices=["f1", "pcs"])
    g.add_argument("--clip", type=float)
    g.add_argument("--stop-at", dest="stop_at", type=float)
    g.add_argument("--strip-labels", action="store_true",
                   help="truncate subtyped relations such as conj:and")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="negscope", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True, metavar="verb")

    p = sub.add_parser("train", help="train one model")
    p.add_argument("--model", required=True, choices=["bilstm", "dlstm", "gcn"])
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", help="training log (default: checkpoint path with .log)")
    p.add_argument("--vectors", help="pretrained word vectors; frozen when given")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write per-token probabilities")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strip-labels", action="store_true")
    p.add_argument("--compose", choices=["premapped", "average", "argmax"])
    p.add_argument("--premapped", help="vectors already mapped into the training space")
    p.add_argument("--target-vectors", help="training-language vectors")
    p.add_argument("--translations", help="source<TAB>target<TAB>probability table")
    p.add_argument("--weighting", choices=["probability", "uniform"], default="probability")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ensemble", help="confidence-vote two probability files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True, help="probability TSV or voted label TSV")
    p.add_argument("--out")
    p.add_argument("--easy-hard", action="store_true")
    p.add_argument("--lca-report", action="store_true")
    p.add_argument("--diagnostics", help="per-instance TSV output path")
    p.add_argument("--tsv", action="store_true")
    p.add_argument("--macro", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="3x3 feature-ablation grid of voting ensembles")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--structured", choices=["dlstm", "gcn"], default="dlstm")
    p.add_argument("--out")
    p.add_argument("--tsv", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("strip-punct", help="remove punctuation tokens from a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_strip_punct)

    p = sub.add_parser("gradcheck", help="finite-difference check of model gradients")
    p.add_argument("--model", default="all", choices=["all", "bilstm", "dlstm", "gcn"])
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-size", type=int, default=5)
    p.add_argument("--max-size", type=int, default=12)
    p.add_argument("--layers", type=int, default=2, help="GCN layers during the check")
    p.add_argument("--max-entries", type=int, help="probe at most this many entries per tensor")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth", help="generate a synthetic NSF corpus")
    p.add_argument("--task", required=True, choices=TASKS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--min-size", type=int, default=5)
    p.add_argument("--max-size", type=int, default=12)
    p.add_argument("--vocab", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return ap


def run_cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, argv)
    except (CorpusError, ValidationFailure, ValueError, OSError) as err:
        print(f"negscope {args.verb}: error: {err}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
