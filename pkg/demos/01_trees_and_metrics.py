# coding: utf-8

# # Negation instances, trees and scope metrics
#
# A sentence in NSF is a CoNLL-style block: six token columns followed by
# one cue/scope pair per negation instance.  Here "not" is the cue and the
# scope is "You ... drive".

# In[1]:

from negscope.corpus import parse_string
from negscope.evaluation import (evaluate, format_report, is_easy, punctuation_window,
                                 scope_spans, span_labels)

text = """# sent_id = demo
# lang = en
1\tYou\tyou\tPRON\t4\tnsubj\t_\tS
2\tmust\tmust\tAUX\t4\taux\t_\t_
3\tnot\tnot\tPART\t4\tneg\tC\t_
4\tdrive\tdrive\tVERB\t0\troot\t_\tS
5\tbecause\tbecause\tSCONJ\t8\tmark\t_\t_
6\tit\tit\tPRON\t8\tnsubj\t_\t_
7\tis\tbe\tAUX\t8\tcop\t_\t_
8\tdangerous\tdangerous\tADJ\t4\tadvcl\t_\t_

"""
sent = parse_string(text)[0]
inst = sent.instances[0]
print(sent.forms)
print("cue", sorted(inst.cue), "scope", sorted(inst.scope))


# The dependency tree is built once per sentence.  Tree distance and the
# lowest common ancestor are what the analysis tables are made of.

# In[2]:

tree = sent.tree
print("root:", tree.root, "children of 'drive':", tree.children[4])
print("distance You -> dangerous:", tree.distance(1, 8))
print("scope spans:", scope_spans(inst.scope))
print("LCA label of each span:", span_labels(inst))


# An instance is EASY when its gold scope equals the punctuation window
# around the cue.  This sentence has no punctuation, so the window is the
# whole sentence and the instance is HARD.

# In[3]:

print("window:", sorted(punctuation_window(inst)), "easy:", is_easy(inst))


# Scoring: token-level precision/recall/F1 over scope tokens, plus PCS
# (the share of instances whose scope is exactly right).  One extra token
# costs precision and the exact match.

# In[4]:

print(format_report(evaluate([inst], [{1, 4}])))
print(format_report(evaluate([inst], [{1, 2, 4}])))
