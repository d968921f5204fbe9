"""Sequential BiLSTM tagger over word, cue and PoS embeddings."""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from .base import LSTMWeights, ModelConfig, ScopeModel, readout, run_lstm, uniform


class BiLSTM(ScopeModel):
    """One forward and one backward LSTM layer; the two hidden states of each
    token are concatenated and fed to a two-way softmax."""

    kind = "bilstm"

    def __init__(self, config: ModelConfig, tables, rng):
        super().__init__(config, tables)
        d_in, h = self.input_width(), config.d_h
        self.fw = LSTMWeights("fw", d_in, h, rng)
        self.bw = LSTMWeights("bw", d_in, h, rng)
        self.W_out = ad.parameter(uniform(rng, (2 * h, 2)), "out.W")
        self.b_out = ad.parameter(np.zeros(2), "out.b")
        for p in self.fw.params() + self.bw.params() + [self.W_out, self.b_out]:
            self.weights[p.name] = p

    def hidden(self, X: ad.Tensor) -> ad.Tensor:
        fw = ad.stack(run_lstm(X, self.fw))
        bw = ad.stack(run_lstm(X, self.bw, reverse=True))
        return ad.concat([fw, bw], axis=1)

    def forward(self, instance, train=False, rng=None):
        H = self.hidden(self.encode(instance))
        return readout(H, self.W_out, self.b_out, self.config.dropout, train, rng)
