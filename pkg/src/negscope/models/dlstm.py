"""Bidirectional dependency LSTM.

A child-sum TreeLSTM runs leaves-to-root; a second LSTM then runs
root-to-leaves, reading each node's parent state and, through the
injection matrices ``A`` and the memory gate ``m``, the node's own
bottom-up state.  Scope probabilities are read from the top-down states.

Weight layout (row-vector convention, ``z = x @ W``):

* ``in.W``, ``in.b``: projection of [word; cue; pos; label] to ``d_h``
* ``up.W_iou``, ``up.U_iou``, ``up.b_iou``: input, output, candidate gates
* ``up.W_f``, ``up.U_f``, ``up.b_f``: per-child forget gate
* ``down.W``, ``down.U``, ``down.A``, ``down.b``: gates i, f, o, m, u
* ``out.W``, ``out.b``: softmax readout
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..corpus import DependencyTree
from .base import ModelConfig, ScopeModel, readout, uniform


@dataclass
class State:
    h: ad.Tensor
    c: ad.Tensor


def bottom_up(tree: DependencyTree, X: ad.Tensor, w: dict, d_h: int) -> dict:
    """Child-sum TreeLSTM states for every node; ``X`` holds one projected row per token."""
    h = d_h
    XWiou = ad.add(ad.matmul(X, w["up.W_iou"]), w["up.b_iou"])
    XWf = ad.add(ad.matmul(X, w["up.W_f"]), w["up.b_f"])
    states = {}
    for v in tree.postorder():
        r = v - 1
        z = XWiou[r]
        # fixed summation order keeps states bitwise independent of child order
        kids = sorted(tree.children[v])
        fc = None
        if kids:
            Hc = ad.stack([states[k].h for k in kids])
            Cc = ad.stack([states[k].c for k in kids])
            z = ad.add(z, ad.matmul(ad.sum_rows(Hc), w["up.U_iou"]))
            f = ad.sigmoid(ad.add(ad.matmul(Hc, w["up.U_f"]), XWf[r]))
            fc = ad.sum_rows(ad.mul(f, Cc))
        gates = ad.sigmoid(z[:2 * h])
        i, o = gates[:h], gates[h:]
        u = ad.tanh(z[2 * h:])
        c = ad.mul(i, u)
        if fc is not None:
            c = ad.add(c, fc)
        states[v] = State(ad.mul(o, ad.tanh(c)), c)
    return states


def top_down(tree: DependencyTree, X: ad.Tensor, up: dict | None, w: dict, d_h: int,
             injection: bool = True) -> dict:
    """Root-to-leaves states.  The root sees zero parent state."""
    if up is None or any(v not in up for v in tree.parent):
        raise ValueError("top-down pass needs the bottom-up states of every node")
    h = d_h
    base = ad.add(ad.matmul(X, w["down.W"]), w["down.b"])
    if injection:
        H_up = ad.stack([up[v].h for v in range(1, len(tree) + 1)])
        base = ad.add(base, ad.matmul(H_up, w["down.A"]))
    states = {}
    for v in tree.preorder():
        p = tree.parent[v]
        z = base[v - 1]
        if p:
            z = ad.add(z, ad.matmul(states[p].h, w["down.U"]))
        gates = ad.sigmoid(z[:4 * h])
        i, f, o, m = gates[:h], gates[h:2 * h], gates[2 * h:3 * h], gates[3 * h:]
        u = ad.tanh(z[4 * h:])
        c = ad.mul(i, u)
        if p:
            c = ad.add(c, ad.mul(f, states[p].c))
        if injection:
            c = ad.add(c, ad.mul(m, up[v].c))
        states[v] = State(ad.mul(o, ad.tanh(c)), c)
    return states


class DLSTM(ScopeModel):
    kind = "dlstm"
    uses_label = True

    def __init__(self, config: ModelConfig, tables, rng):
        super().__init__(config, tables)
        d_in, h = self.input_width(), config.d_h
        b_f = np.ones(h)
        b_down = np.zeros(5 * h)
        b_down[h:2 * h] = 1.0
        shapes = {
            "in.W": uniform(rng, (d_in, h)), "in.b": np.zeros(h),
            "up.W_iou": uniform(rng, (h, 3 * h)), "up.U_iou": uniform(rng, (h, 3 * h)),
            "up.b_iou": np.zeros(3 * h),
            "up.W_f": uniform(rng, (h, h)), "up.U_f": uniform(rng, (h, h)), "up.b_f": b_f,
            "down.W": uniform(rng, (h, 5 * h)), "down.U": uniform(rng, (h, 5 * h)),
            "down.A": uniform(rng, (h, 5 * h)), "down.b": b_down,
            "out.W": uniform(rng, (h, 2)), "out.b": np.zeros(2),
        }
        for name, value in shapes.items():
            self.weights[name] = ad.parameter(value, name)

    def project(self, instance) -> ad.Tensor:
        X = self.encode(instance)
        return ad.add(ad.matmul(X, self.weights["in.W"]), self.weights["in.b"])

    def bottom_up(self, instance, X=None, tree=None) -> dict:
        X = self.project(instance) if X is None else X
        return bottom_up(tree or instance.sentence.tree, X, self.weights, self.config.d_h)

    def top_down(self, instance, up, X=None, tree=None) -> dict:
        X = self.project(instance) if X is None else X
        return top_down(tree or instance.sentence.tree, X, up, self.weights, self.config.d_h,
                        self.config.injection)

    def forward(self, instance, train=False, rng=None):
        tree = instance.sentence.tree
        X = self.project(instance)
        up = self.bottom_up(instance, X, tree)
        down = self.top_down(instance, up, X, tree)
        H = ad.stack([down[v].h for v in range(1, len(tree) + 1)])
        return readout(H, self.weights["out.W"], self.weights["out.b"],
                       self.config.dropout, train, rng)
