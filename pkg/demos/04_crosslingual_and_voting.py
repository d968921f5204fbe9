# coding: utf-8

# # Word vectors across languages, and two-model voting
#
# A target-language word has no vector of its own.  It borrows one from its
# translations: either the single most probable translation (`argmax`) or a
# probability-weighted mean over all of them (`average`).

# In[1]:

import numpy as np

from negscope.embeddings import EmbeddingTable, TranslationTable, compose_crosslingual
from negscope.ensemble import confidence_vote

english = EmbeddingTable(["not", "never", "no"], np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0],
                                                             [0.0, 0.0]]), trainable=False)
table = TranslationTable()
table.add("不", "not", 0.7)
table.add("不", "no", 0.3)
table.add("没", "never", 1.0)

for method in ("argmax", "average"):
    comp = compose_crosslingual(method, ["不", "没", "猫"], english, table)
    print(method, "coverage", comp.coverage, "不 ->", comp.table.vector("不"))


# Voting: each token goes to whichever model is more confident, i.e. has
# the larger |p_in - p_out|.  Exact ties go to the first model.

# In[2]:

a = np.array([[0.6, 0.4], [0.2, 0.8], [0.3, 0.7]])
b = np.array([[0.1, 0.9], [0.4, 0.6], [0.3, 0.7]])
v = confidence_vote(a, b)
print("labels", v.labels, "winner", v.winner, "margin", v.margin)
print("voted scope", sorted(v.scope()))
