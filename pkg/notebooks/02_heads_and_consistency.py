# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Shared weights vs. per-task weights
#
# The CORAL head scores every task with the same weight vector and only
# shifts it by a bias per task. With descending biases the probabilities are
# descending for any input. The OR head gives each task its own weights and
# makes no such promise.

import numpy as np

from coral_ordinal import init_model
from coral_ordinal.core import inconsistency_counts

rng = np.random.default_rng(0)
X = rng.normal(scale=3.0, size=(2000, 3))

coral = init_model(3, 6, "coral", hidden=(8, 4), seed=1)
coral = coral.with_parameters(coral.parameters()[:-1] + [np.array([2.0, 1.0, 0.0, -1.0, -2.0])])
p = coral.probs(X)
print("probabilities non-increasing on every row:", bool(np.all(p[:, :-1] >= p[:, 1:])))
print("inconsistent rows:", int(np.sum(inconsistency_counts(coral.decisions(X)) > 0)))

# A randomly initialised OR head, same body size:

orm = init_model(3, 6, "or", hidden=(8, 4), seed=1)
counts = inconsistency_counts(orm.decisions(X))
print("inconsistent rows:", int(np.sum(counts > 0)), "of", len(X))
print("mean count:", counts.mean())

# Training tends to align the OR tasks, but nothing in the model forces it;
# see `06_benchmark.py` for what happens after training.
