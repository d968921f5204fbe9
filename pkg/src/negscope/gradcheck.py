"""Finite-difference checks of the full model losses on random trees."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .corpus import to_instances
from .models import ModelConfig, build_model
from .synth import synth_generate

TINY = dict(d_w=3, d_c=2, d_p=2, d_l=2, d_h=3, dropout=0.2, neighbor_dropout=0.2,
            precision="float64")


@dataclass
class ModelGradCheck:
    kind: str
    trials: int
    tolerance: float
    max_rel_error: float = 0.0
    worst: str = ""
    entries: int = 0
    per_trial: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance


def check_model(kind: str, trials: int = 20, tol: float = 1e-4, eps: float = 1e-5,
                seed: int = 0, min_size: int = 5, max_size: int = 12, layers: int = 2,
                max_entries: int | None = None, dropout: bool = True, **config) -> ModelGradCheck:
    """Gradient-check ``kind`` on ``trials`` random instances in 64-bit mode.

    Each trial draws a fresh tree and fresh parameters.  When ``dropout``
    is on, every loss evaluation replays the same masks, so the check also
    covers the dropout paths.
    """
    out = ModelGradCheck(kind, trials, tol)
    rng = np.random.default_rng(seed)
    for trial in range(trials):
        corpus = synth_generate("subtree", 1, min_size, max_size, vocab_size=6,
                                seed=int(rng.integers(2**31)), prefix=f"gc{trial}")
        inst = to_instances(corpus)[0]
        cfg = ModelConfig(**{**TINY, "layers": layers, "seed": int(rng.integers(2**31)), **config})
        model = build_model(kind, corpus, cfg)
        # nonzero biases so that no gradient path is trivially dead
        for p in model.parameters().values():
            p.data += rng.uniform(-0.3, 0.3, size=p.shape)
        mask_seed = int(rng.integers(2**31))

        def loss():
            r = np.random.default_rng(mask_seed)
            return model.loss(inst, train=dropout, rng=r)

        with ad.precision("float64"):
            rep = ad.grad_check(loss, model.parameters(), eps=eps, tol=tol,
                                max_entries=max_entries, rng=rng)
        out.per_trial.append(rep.max_rel_error)
        out.entries += rep.checked
        if rep.max_rel_error >= out.max_rel_error:
            out.max_rel_error = rep.max_rel_error
            out.worst = f"trial {trial} {rep.worst_parameter}"
    return out
