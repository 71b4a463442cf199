# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Biases at the optimum come out ordered
#
# Freeze the scores g(x) and minimise the weighted loss over the biases
# alone. The problem splits into one convex 1-D problem per task, and the
# minimisers are non-increasing in k. Task weights rescale each 1-D problem
# but do not move its minimiser.

import numpy as np

from coral_ordinal import extend_labels, optimize_biases_only
from coral_ordinal.verify import ordered_bias_instance, ordered_bias_trials

rng = np.random.default_rng(5)
scores, targets, lam = ordered_bias_instance(rng)
b = optimize_biases_only(scores, targets, lam)
print("K =", targets.shape[1] + 1, "N =", len(scores))
print(np.round(b, 4))
print("gaps:", np.round(b[:-1] - b[1:], 4))

# A tiny instance by hand: scores -1, 0, 1 with ranks 1, 2, 3.

optimize_biases_only(np.array([-1.0, 0.0, 1.0]), extend_labels([1, 2, 3], 3))

# 100 random instances:

bs = ordered_bias_trials(100, seed=0)
print(sum(bool(np.all(b[:-1] >= b[1:] - 1e-9)) for b in bs), "/ 100 ordered")
print("smallest gap:", min(float(np.min(b[:-1] - b[1:])) for b in bs))
