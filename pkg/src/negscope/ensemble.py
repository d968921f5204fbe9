"""Per-token confidence voting between two taggers.

For every token the model whose (p_out, p_in) pair is further from a
coin flip decides the label; on an exact tie the first model wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

IN, OUT = 1, 0
A, B = 0, 1


@dataclass
class VotePrediction:
    labels: np.ndarray   # 1 = in scope
    winner: np.ndarray   # 0 = first model, 1 = second
    margin: np.ndarray   # |p_in - p_out| of the winner

    def scope(self) -> frozenset:
        return frozenset(int(i) + 1 for i in np.flatnonzero(self.labels))


def confidence_vote(probs_a, probs_b) -> VotePrediction:
    a = np.asarray(probs_a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(probs_b, dtype=np.float64).reshape(-1, 2)
    if a.shape != b.shape:
        raise ValueError(f"token counts differ: {a.shape[0]} vs {b.shape[0]}")
    ma = np.abs(a[:, IN] - a[:, OUT])
    mb = np.abs(b[:, IN] - b[:, OUT])
    pick_b = mb > ma
    chosen = np.where(pick_b[:, None], b, a)
    # argmax with ties to out-of-scope
    labels = (chosen[:, IN] > chosen[:, OUT]).astype(int)
    return VotePrediction(labels, pick_b.astype(int), np.where(pick_b, mb, ma))


# ------------------------------------------------------------ probability TSV

PROB_HEADER = "sid\tinstance\ttoken\tp_out\tp_in"


def write_probabilities(path, rows: Iterable[tuple]) -> None:
    """Rows are ``(sid, instance_index, token_id, p_out, p_in)``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(PROB_HEADER + "\n")
        for sid, k, tid, p_out, p_in in rows:
            fh.write(f"{sid}\t{k}\t{tid}\t{p_out:.9g}\t{p_in:.9g}\n")


def read_probabilities(path) -> dict:
    """Map ``(sid, instance)`` to an ``(n, 2)`` array ordered by token id."""
    tmp: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or (lineno == 1 and line.startswith("sid\t")):
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns, got {len(cols)}")
            key = (cols[0], int(cols[1]))
            tmp.setdefault(key, []).append((int(cols[2]), float(cols[3]), float(cols[4])))
    out = {}
    for key, rows in tmp.items():
        rows.sort()
        ids = [r[0] for r in rows]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError(f"{path}: instance {key} has token ids {ids}")
        out[key] = np.array([[r[1], r[2]] for r in rows])
    return out


def vote_files(path_a, path_b) -> dict:
    pa, pb = read_probabilities(path_a), read_probabilities(path_b)
    if pa.keys() != pb.keys():
        missing = sorted(set(pa) ^ set(pb))[:5]
        raise ValueError(f"probability files cover different instances, e.g. {missing}")
    return {key: confidence_vote(pa[key], pb[key]) for key in pa}
