"""Training loop, Adam, feature-ablation grid and the punctuation experiment."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .corpus import Sentence, strip_punctuation_corpus, to_instances
from .ensemble import confidence_vote
from .evaluation import EvalReport, evaluate, format_table
from .models import ModelConfig, ScopeModel, build_model, save_checkpoint

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 30
    patience: int = 5
    select: str = "f1"
    seed: int = 1
    shuffle: bool = True
    clip: float = 5.0
    stop_at: float | None = None

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.select not in ("f1", "pcs"):
            raise ValueError(f"unknown selection metric {self.select!r}")


class Adam:
    def __init__(self, params: dict, lr=0.005, beta1=0.9, beta2=0.999, eps=1e-8, clip=None):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps, self.clip = lr, beta1, beta2, eps, clip
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def grad_norm(self) -> float:
        return math.sqrt(sum(float(np.vdot(p.grad, p.grad)) for p in self.params.values()
                             if p.grad is not None))

    def step(self) -> None:
        scale = 1.0
        if self.clip is not None:
            norm = self.grad_norm()
            if norm > self.clip:
                scale = self.clip / norm
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        lr_t = self.lr * math.sqrt(1 - b2 ** self.t) / (1 - b1 ** self.t)
        for k, p in self.params.items():
            m, v = self.m[k], self.v[k]
            m *= b1
            v *= b2
            if p.grad is not None:
                g = p.grad * scale if scale != 1.0 else p.grad
                m += (1 - b1) * g
                v += (1 - b2) * g * g
            p.data -= (lr_t * m / (np.sqrt(v) + self.eps)).astype(p.data.dtype, copy=False)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    dev_f1: float
    dev_pcs: float
    seconds: float = 0.0

    def line(self) -> str:
        return f"epoch {self.epoch} loss {self.loss:.6f} dev_f1 {self.dev_f1:.4f} dev_pcs {self.dev_pcs:.4f}"


@dataclass
class TrainResult:
    model: ScopeModel
    history: list = field(default_factory=list)
    best_epoch: int = 0
    best_metric: float = float("-inf")

    def log_text(self) -> str:
        return "".join(r.line() + "\n" for r in self.history)


def predict_scopes(model: ScopeModel, instances) -> list[frozenset]:
    return [model.predict_scope(inst) for inst in instances]


def evaluate_model(model: ScopeModel, instances) -> EvalReport:
    return evaluate(instances, predict_scopes(model, instances))


def mean_token_loss(model: ScopeModel, instances) -> float:
    """Cross-entropy per non-cue token without dropout or updates."""
    total = 0.0
    count = 0
    for inst in instances:
        total += float(model.loss(inst, train=False).data[0])
        count += sum(t.id not in inst.cue for t in inst.sentence.tokens)
    return total / max(count, 1)


def train(kind: str, train_corpus: Sequence[Sentence], dev_corpus: Sequence[Sentence],
          model_config: ModelConfig | None = None, train_config: TrainConfig | None = None,
          pretrained=None, model: ScopeModel | None = None, log_path=None,
          checkpoint_path=None) -> TrainResult:
    """Train one model with per-instance Adam updates and dev-based early stopping.

    The parameters of the best dev epoch are restored on return (and
    written to ``checkpoint_path`` if given).
    """
    model_config = model_config or ModelConfig()
    tc = train_config or TrainConfig()
    train_insts = to_instances(train_corpus)
    dev_insts = to_instances(dev_corpus)
    if not train_insts:
        raise ValueError("training split has no negation instances")
    if model is None:
        model = build_model(kind, train_corpus, model_config, pretrained)
    params = model.parameters()
    opt = Adam(params, tc.lr, tc.beta1, tc.beta2, tc.eps, tc.clip)
    rng = np.random.default_rng(tc.seed)
    result = TrainResult(model)
    best_state = model.state()
    stale = 0
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        with ad.precision(model.config.precision):
            for epoch in range(1, tc.max_epochs + 1):
                start = time.perf_counter()
                order = rng.permutation(len(train_insts)) if tc.shuffle else range(len(train_insts))
                total, count = 0.0, 0
                for i in order:
                    inst = train_insts[i]
                    with ad.Tape() as tape:
                        loss = model.loss(inst, train=True, rng=rng)
                    tape.backward(loss)
                    opt.step()
                    opt.zero_grad()
                    total += float(loss.data[0])
                    count += sum(t.id not in inst.cue for t in inst.sentence.tokens)
                report = evaluate_model(model, dev_insts) if dev_insts else EvalReport(0, 0, 0, 0, 0)
                rec = EpochRecord(epoch, total / max(count, 1), report.f1, report.pcs,
                                  time.perf_counter() - start)
                result.history.append(rec)
                log.info("%s %s (%.1fs)", kind, rec.line(), rec.seconds)
                if log_fh:
                    log_fh.write(rec.line() + "\n")
                    log_fh.flush()
                metric = report.f1 if tc.select == "f1" else report.pcs
                if metric > result.best_metric:
                    result.best_metric, result.best_epoch = metric, epoch
                    best_state = model.state()
                    stale = 0
                else:
                    stale += 1
                if stale >= tc.patience:
                    break
                if tc.stop_at is not None and metric >= tc.stop_at:
                    break
    finally:
        if log_fh:
            log_fh.close()
    model.load_state(best_state)
    if checkpoint_path:
        save_checkpoint(checkpoint_path, model, {"best_epoch": result.best_epoch,
                                                 "best_metric": result.best_metric})
    return result


# ------------------------------------------------------------------ ablation

MASKS = {"all": (True, True), "-w": (False, True), "-p": (True, False)}


@dataclass
class AblationResult:
    cells: dict
    members: dict

    def table(self, tsv: bool = False) -> str:
        """Rows: BiLSTM mask, then P/R/F1; columns: D-LSTM mask."""
        cols = list(MASKS)
        rows = []
        for bm in MASKS:
            for metric in ("P", "R", "F1"):
                vals = [self.cells[(bm, dm)].as_row()[metric] for dm in cols]
                rows.append([bm if metric == "P" else "", metric] + vals)
        return format_table(["BiLSTM", "", *[f"D-LSTM {c}" for c in cols]], rows, tsv)


def ablate_grid(train_corpus, dev_corpus, test_corpus, model_config: ModelConfig | None = None,
                train_config: TrainConfig | None = None, pretrained=None,
                structured: str = "dlstm") -> AblationResult:
    """Train the three feature-masked variants of each ensemble member and
    score all nine confidence-voting combinations on ``test_corpus``."""
    model_config = model_config or ModelConfig()
    test_insts = to_instances(test_corpus)
    probs = {}
    members = {}
    for kind in ("bilstm", structured):
        for mask, (use_w, use_p) in MASKS.items():
            cfg = replace(model_config, use_word=use_w, use_pos=use_p)
            res = train(kind, train_corpus, dev_corpus, cfg, train_config, pretrained)
            members[(kind, mask)] = res
            probs[(kind, mask)] = [res.model.predict_proba(i) for i in test_insts]
    cells = {}
    for bm in MASKS:
        for dm in MASKS:
            preds = []
            for pa, pb, inst in zip(probs[("bilstm", bm)], probs[(structured, dm)], test_insts):
                vote = confidence_vote(pa, pb)
                preds.append(vote.scope() - inst.cue)
            cells[(bm, dm)] = evaluate(test_insts, preds)
    return AblationResult(cells, members)


# ------------------------------------------------------- punctuation removal

def strip_punctuation_experiment(train_corpus, dev_corpus, test_corpus, kind: str = "bilstm",
                                 model_config: ModelConfig | None = None,
                                 train_config: TrainConfig | None = None,
                                 pretrained=None) -> tuple[EvalReport, EvalReport]:
    """Train and score the same model with and without punctuation tokens."""
    reports = []
    for strip in (False, True):
        splits = [train_corpus, dev_corpus, test_corpus]
        if strip:
            splits = [strip_punctuation_corpus(s) for s in splits]
        res = train(kind, splits[0], splits[1], model_config, train_config, pretrained)
        reports.append(evaluate_model(res.model, to_instances(splits[2])))
    return reports[0], reports[1]
