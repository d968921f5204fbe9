# coding: utf-8

# # A small tape-based autodiff
#
# Tensors are numpy arrays plus a gradient slot.  Operations run inside a
# `Tape` block are recorded, and `backward` replays them in reverse.

# In[1]:

import numpy as np

from negscope import autodiff as ad

x = ad.parameter(np.array([[0.5, -1.0, 2.0]]), "x")
W = ad.parameter(np.random.default_rng(0).normal(size=(3, 2)), "W")
with ad.Tape() as tape:
    probs = ad.softmax(ad.matmul(x, W))
    loss = ad.cross_entropy(probs, [1])
tape.backward(loss)
print("loss", loss.data.item())
print("dL/dW\n", W.grad)


# Gradients are checked against central finite differences.  The check
# rebuilds the graph for every probe, so it needs 64-bit tensors.

# In[2]:

with ad.precision("float64"):
    x64 = ad.parameter(np.array([[0.5, -1.0, 2.0]]), "x")
    W64 = ad.parameter(np.random.default_rng(0).normal(size=(3, 2)), "W")
    report = ad.grad_check(lambda: ad.cross_entropy(ad.softmax(ad.matmul(x64, W64)), [1]),
                           {"x": x64, "W": W64})
print("max relative error", report.max_rel_error, "passed", report.passed)


# The same check runs over whole models on random trees.  This is what the
# `negscope gradcheck` verb does.

# In[3]:

from negscope.gradcheck import check_model

for kind in ("bilstm", "dlstm", "gcn"):
    res = check_model(kind, trials=2, seed=1)
    print(kind, "passed" if res.passed else "FAILED", f"{res.max_rel_error:.2e}")
