"""Scope metrics and the punctuation / syntactic-environment analyses."""

from __future__ import annotations

import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import NegationInstance


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    pcs: float
    instances: int
    tables: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        return {"P": self.precision, "R": self.recall, "F1": self.f1, "PCS": self.pcs,
                "n": self.instances}


def _ratio(num: int, den: int, empty: float) -> float:
    return 100.0 * num / den if den else empty


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _check_aligned(predictions, golds):
    if len(predictions) != len(golds):
        raise ValueError(f"{len(predictions)} predictions for {len(golds)} gold instances")


def token_prf(predictions: Sequence[Iterable[int]], golds: Sequence[Iterable[int]],
              macro: bool = False) -> tuple[float, float, float]:
    """Token precision, recall and F1 (percentages) over scope-token sets.

    Micro-averaged by default.  With no predicted tokens precision is 0
    unless there were also no gold tokens (then both are 100), and
    symmetrically for recall.
    """
    _check_aligned(predictions, golds)
    pairs = [(set(p), set(g)) for p, g in zip(predictions, golds)]
    if macro:
        if not pairs:
            return 0.0, 0.0, 0.0
        ps, rs, fs = [], [], []
        for p, g in pairs:
            tp = len(p & g)
            pi = _ratio(tp, len(p), 100.0 if not g else 0.0)
            ri = _ratio(tp, len(g), 100.0 if not p else 0.0)
            ps.append(pi)
            rs.append(ri)
            fs.append(_f1(pi, ri))
        n = len(pairs)
        return sum(ps) / n, sum(rs) / n, sum(fs) / n
    tp = sum(len(p & g) for p, g in pairs)
    n_pred = sum(len(p) for p, _ in pairs)
    n_gold = sum(len(g) for _, g in pairs)
    precision = _ratio(tp, n_pred, 100.0 if n_gold == 0 else 0.0)
    recall = _ratio(tp, n_gold, 100.0 if n_pred == 0 else 0.0)
    return precision, recall, _f1(precision, recall)


def pcs(predictions: Sequence[Iterable[int]], golds: Sequence[Iterable[int]]) -> float:
    """Percentage of instances whose predicted scope equals the gold scope."""
    _check_aligned(predictions, golds)
    if not golds:
        return 0.0
    exact = sum(set(p) == set(g) for p, g in zip(predictions, golds))
    return 100.0 * exact / len(golds)


def evaluate(instances: Sequence[NegationInstance], predictions: Sequence[Iterable[int]],
             macro: bool = False) -> EvalReport:
    """Score predicted scopes against the gold scopes of ``instances``; cue tokens never count."""
    _check_aligned(predictions, instances)
    preds = [set(p) - inst.cue for p, inst in zip(predictions, instances)]
    golds = [set(inst.scope) - inst.cue for inst in instances]
    p, r, f = token_prf(preds, golds, macro)
    return EvalReport(p, r, f, pcs(preds, golds), len(instances))


# ------------------------------------------------------------------ easy / hard

def punctuation_window(instance: NegationInstance) -> frozenset:
    """Non-punctuation, non-cue tokens strictly between the punctuation marks
    (or sentence edges) closest to the cue on either side."""
    toks = instance.sentence.tokens
    first, last = min(instance.cue), max(instance.cue)
    lo = max((t.id for t in toks if t.is_punct and t.id < first), default=0)
    hi = min((t.id for t in toks if t.is_punct and t.id > last), default=len(toks) + 1)
    return frozenset(t.id for t in toks[lo:hi - 1]
                     if not t.is_punct and t.id not in instance.cue)


def is_easy(instance: NegationInstance) -> bool:
    return frozenset(instance.scope) == punctuation_window(instance)


def easy_hard_split(instances: Sequence[NegationInstance]) -> tuple[list, list]:
    easy, hard = [], []
    for inst in instances:
        (easy if is_easy(inst) else hard).append(inst)
    return easy, hard


def easy_hard_report(instances, predictions) -> dict:
    """PCS (and token scores) separately for easy and hard instances."""
    _check_aligned(predictions, instances)
    groups = {"easy": ([], []), "hard": ([], [])}
    for inst, pred in zip(instances, predictions):
        insts, preds = groups["easy" if is_easy(inst) else "hard"]
        insts.append(inst)
        preds.append(pred)
    return {k: evaluate(i, p) for k, (i, p) in groups.items()}


# ------------------------------------------------------------------------- LCA

def scope_spans(scope: Iterable[int]) -> list[list[int]]:
    """Maximal runs of consecutive token ids."""
    spans: list[list[int]] = []
    for i in sorted(scope):
        if spans and spans[-1][-1] == i - 1:
            spans[-1].append(i)
        else:
            spans.append([i])
    return spans


def span_labels(instance: NegationInstance) -> list[str]:
    """Incoming relation of the least common ancestor of each gold-scope span."""
    tree = instance.sentence.tree
    labels = []
    for span in scope_spans(instance.scope):
        top = tree.lca(span)
        labels.append("root" if top == tree.root else tree.label[top])
    return labels


EMPTY_SCOPE = "<empty>"


def lca_environment_report(instances: Sequence[NegationInstance],
                           predictions: Sequence[Iterable[int]]) -> list[tuple[str, int, EvalReport]]:
    """Token F1 and PCS grouped by syntactic environment of the gold scope.

    An instance with a discontinuous scope is counted once under each
    distinct span label.  Rows are sorted by label frequency, most
    frequent first.
    """
    _check_aligned(predictions, instances)
    groups: dict[str, tuple[list, list]] = defaultdict(lambda: ([], []))
    freq: Counter = Counter()
    for inst, pred in zip(instances, predictions):
        labels = span_labels(inst) or [EMPTY_SCOPE]
        for lab in dict.fromkeys(labels):
            groups[lab][0].append(inst)
            groups[lab][1].append(pred)
            freq[lab] += 1
    order = sorted(freq, key=lambda k: (-freq[k], k))
    return [(lab, freq[lab], evaluate(*groups[lab])) for lab in order]


# --------------------------------------------------------------------- output

def format_table(header: Sequence[str], rows: Sequence[Sequence], tsv: bool = False) -> str:
    def cell(x):
        return f"{x:.2f}" if isinstance(x, float) else str(x)

    body = [[cell(x) for x in r] for r in rows]
    if tsv:
        return "\n".join("\t".join(r) for r in [list(header)] + body) + "\n"
    widths = [max(len(str(h)), *(len(r[i]) for r in body)) if body else len(str(h))
              for i, h in enumerate(header)]
    out = io.StringIO()
    out.write("  ".join(str(h).rjust(w) for h, w in zip(header, widths)).rstrip() + "\n")
    for r in body:
        out.write("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() + "\n")
    return out.getvalue()


def format_report(report: EvalReport, tsv: bool = False) -> str:
    return format_table(["P", "R", "F1", "PCS", "n"],
                        [[report.precision, report.recall, report.f1, report.pcs,
                          report.instances]], tsv)


def format_lca(rows, tsv: bool = False) -> str:
    return format_table(["label", "count", "F1", "PCS"],
                        [[lab, n, rep.f1, rep.pcs] for lab, n, rep in rows], tsv)


def diagnostics(instances, predictions) -> str:
    """Per-instance TSV: sentence id, instance index, easy/hard, span labels, exact match."""
    lines = ["sid\tinstance\tsplit\tlca_labels\texact"]
    for inst, pred in zip(instances, predictions):
        labels = ",".join(span_labels(inst)) or EMPTY_SCOPE
        exact = int(set(pred) - inst.cue == set(inst.scope))
        split = "easy" if is_easy(inst) else "hard"
        lines.append(f"{inst.sentence.sid}\t{inst.index}\t{split}\t{labels}\t{exact}")
    return "\n".join(lines) + "\n"
