"""Gated graph convolution over dependency trees.

Every node aggregates messages from itself, its head and its dependents.
A message from ``u`` to ``v`` is ``W_dir h_u + W_l l + b`` (or, in the
``bias`` form, ``W_dir h_u + b_label``) scaled by a scalar edge gate
``sigmoid(w_dir . h_u + b_label)``.  The edge label ``l`` combines the
dependency relation with the edge direction; self loops carry ``<self>``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..corpus import DependencyTree, Sentence
from ..embeddings import EmbeddingTable, build_vocab
from .base import LSTMWeights, ModelConfig, ScopeModel, readout, run_lstm, uniform

DIRECTIONS = ("along", "reverse", "self")
SELF_LABEL = "<self>"


def edge_label(deprel: str, direction: str) -> str:
    return SELF_LABEL if direction == "self" else f"{deprel}/{direction}"


def edge_vocab(corpus) -> list[str]:
    rels = build_vocab(corpus, "deprel")
    return [SELF_LABEL] + [edge_label(r, d) for r in rels for d in ("along", "reverse")]


@dataclass
class EdgeSet:
    """Edges of one direction as parallel arrays of 0-based rows."""
    src: np.ndarray
    tgt: np.ndarray
    labels: list

    def __len__(self):
        return len(self.src)


def tree_edges(sentence: Sentence, tree: DependencyTree | None = None) -> dict:
    """``along``: head -> dependent; ``reverse``: dependent -> head; ``self``: loops."""
    tree = tree or sentence.tree
    n = len(sentence)
    along_s, along_t, along_l = [], [], []
    for v in range(1, n + 1):
        p = tree.parent[v]
        if p:
            along_s.append(p - 1)
            along_t.append(v - 1)
            along_l.append(tree.label[v])
    idx = np.arange(n)
    return {
        "along": EdgeSet(np.array(along_s, dtype=np.intp), np.array(along_t, dtype=np.intp),
                         [edge_label(l, "along") for l in along_l]),
        "reverse": EdgeSet(np.array(along_t, dtype=np.intp), np.array(along_s, dtype=np.intp),
                           [edge_label(l, "reverse") for l in along_l]),
        "self": EdgeSet(idx, idx, [SELF_LABEL] * n),
    }


def gcn_layer(H: ad.Tensor, edges: dict, w: dict, k: int, labels: EmbeddingTable,
              form: str = "weighted", drop: float = 0.0, train: bool = False, rng=None) -> ad.Tensor:
    """One gated GCN layer; ``w`` holds weights named ``gcn<k>.*``."""
    n = H.shape[0]
    P = f"gcn{k}."
    messages, targets = [], []
    if form == "weighted":
        # label term is shared by every edge with the same label: project the table once
        lab_proj = ad.add(ad.matmul(labels.weight, w[P + "W_l"]), w[P + "b"])
    for d in DIRECTIONS:
        e = edges[d]
        if not len(e):
            continue
        lab = labels.indices(e.labels)
        Hs = ad.lookup(H, e.src)
        pre = ad.matmul(Hs, w[P + "W_" + d])
        if form == "weighted":
            pre = ad.add(pre, ad.lookup(lab_proj, lab))
        else:
            pre = ad.add(pre, ad.lookup(w[P + "b_label"], lab))
        gate = ad.sigmoid(ad.add(ad.matmul(Hs, w[P + "g_" + d]), ad.lookup(w[P + "g_bias"], lab)))
        msg = ad.mul(gate, pre)
        msg = ad.dropout(msg, drop, rng, train, shape=(len(e), 1))
        messages.append(msg)
        targets.append(e.tgt)
    M = ad.concat(messages, axis=0) if len(messages) > 1 else messages[0]
    return ad.relu(ad.scatter_rows(M, np.concatenate(targets), n))


class GCN(ScopeModel):
    kind = "gcn"

    def __init__(self, config: ModelConfig, tables, rng, edge_labels=None):
        super().__init__(config, tables)
        h, L = config.d_h, config.layers
        d_in = self.input_width()
        self.edge_table = EmbeddingTable.random(edge_labels or [SELF_LABEL], config.d_l, rng,
                                                name="edge")
        n_lab = len(self.edge_table) + 1
        w = {}
        if config.pre_encoder == "dense":
            w["pre.W"] = uniform(rng, (d_in, h))
            w["pre.b"] = np.zeros(h)
            d_prev = h
        else:
            self.pre_fw = LSTMWeights("pre.fw", d_in, h, rng)
            self.pre_bw = LSTMWeights("pre.bw", d_in, h, rng)
            d_prev = 2 * h
        for k in range(L):
            P = f"gcn{k}."
            for d in DIRECTIONS:
                w[P + "W_" + d] = uniform(rng, (d_prev, h))
                w[P + "g_" + d] = uniform(rng, (d_prev, 1))
            w[P + "g_bias"] = np.zeros((n_lab, 1))
            if config.gcn_form == "weighted":
                w[P + "W_l"] = uniform(rng, (config.d_l, h))
                w[P + "b"] = np.zeros(h)
            else:
                w[P + "b_label"] = np.zeros((n_lab, h))
            d_prev = h
        w["out.W"] = uniform(rng, (h, 2))
        w["out.b"] = np.zeros(2)
        for name, value in w.items():
            self.weights[name] = ad.parameter(value, name)
        if config.pre_encoder == "bilstm":
            for p in self.pre_fw.params() + self.pre_bw.params():
                self.weights[p.name] = p

    @classmethod
    def from_arrays(cls, config, tables, arrays, extra_meta):
        return cls(config, tables, np.random.default_rng(0), extra_meta["edge"]["words"])

    def extra_tables(self) -> dict:
        return {"emb.edge": self.edge_table.weight}

    def extra_table_meta(self) -> dict:
        return {"edge": {"words": self.edge_table.words, "trainable": True}}

    def parameters(self) -> dict:
        params = super().parameters()
        params["emb.edge"] = self.edge_table.weight
        return params

    def pre_encode(self, X: ad.Tensor) -> ad.Tensor:
        if self.config.pre_encoder == "dense":
            return ad.relu(ad.add(ad.matmul(X, self.weights["pre.W"]), self.weights["pre.b"]))
        fw = ad.stack(run_lstm(X, self.pre_fw))
        bw = ad.stack(run_lstm(X, self.pre_bw, reverse=True))
        return ad.concat([fw, bw], axis=1)

    def hidden(self, instance, train=False, rng=None, X=None) -> ad.Tensor:
        X = self.encode(instance) if X is None else X
        H = self.pre_encode(X)
        edges = tree_edges(instance.sentence)
        for k in range(self.config.layers):
            H = gcn_layer(H, edges, self.weights, k, self.edge_table, self.config.gcn_form,
                          self.config.neighbor_dropout, train, rng)
        return H

    def forward(self, instance, train=False, rng=None):
        H = self.hidden(instance, train, rng)
        return readout(H, self.weights["out.W"], self.weights["out.b"], 0.0, train, rng)
