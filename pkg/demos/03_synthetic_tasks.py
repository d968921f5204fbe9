# coding: utf-8

# # Two synthetic tasks, two kinds of structure
#
# In the `subtree` task the gold scope is the subtree of the cue's head, so
# a tree encoder should find it easily.  In the `window` task the scope is
# delimited by punctuation marks, which a sequence model can read off
# directly.  The run below is small so it finishes in about a minute.

# In[1]:

import logging

from negscope.corpus import to_instances
from negscope.evaluation import easy_hard_split
from negscope.models import ModelConfig
from negscope.synth import synth_generate
from negscope.training import TrainConfig, evaluate_model, strip_punctuation_experiment, train

logging.basicConfig(level=logging.INFO, format="%(message)s")

small = ModelConfig(d_w=8, d_c=8, d_p=8, d_l=8, d_h=24, dropout=0.0, neighbor_dropout=0.0)
quick = TrainConfig(max_epochs=3, patience=2, stop_at=100.0)


# Most subtree instances are HARD: their scope does not coincide with a
# punctuation window.  Every window instance is EASY by construction.

# In[2]:

sub_tr = synth_generate("subtree", 400, 4, 7, seed=1)
sub_te = synth_generate("subtree", 100, 4, 7, seed=2)
win_tr = synth_generate("window", 400, 5, 12, seed=1)
win_te = synth_generate("window", 100, 5, 12, seed=2)
for name, data in (("subtree", sub_te), ("window", win_te)):
    easy, hard = easy_hard_split(to_instances(data))
    print(f"{name}: {len(easy)} easy, {len(hard)} hard")


# A dependency LSTM on the subtree task:

# In[3]:

res = train("dlstm", sub_tr, sub_te, small, quick)
print(evaluate_model(res.model, to_instances(sub_te)))


# The BiLSTM on the window task, once as is and once with every punctuation
# token removed.  Without the delimiters the task loses its signal.

# In[4]:

with_p, without = strip_punctuation_experiment(win_tr, win_te, win_te, "bilstm", small, quick)
print(f"F1 with punctuation {with_p.f1:.1f}, without {without.f1:.1f}")
