# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # From binary errors to rank cost
#
# For rank-monotone decisions the cost of the decoded rank is at most the sum
# of the binary errors, each weighted by the jump in the cost row at that
# threshold. The wrong tasks are exactly the thresholds between the predicted
# and the true rank, so along a V-shaped row the jumps telescope and the two
# sides agree. With the absolute cost every jump is 1, and both sides equal
# the MAE.

import numpy as np

from coral_ordinal.metrics import absolute_cost, bound_check, classification_cost, cost_matrix_kind
from coral_ordinal.verify import random_monotone_decisions, random_v_shaped_cost

rng = np.random.default_rng(1)
K = 6
truths, F = random_monotone_decisions(rng, K, 200)

for name, C in [("absolute", absolute_cost(K)), ("classification", classification_cost(K)),
                ("random V", random_v_shaped_cost(rng, K))]:
    lhs, rhs = bound_check(F, truths, C)
    print(f"{name:15s} lhs={lhs:.4f} rhs={rhs:.4f} {cost_matrix_kind(C)}")

# A row that is not V-shaped makes the right side strictly larger:

C = np.array([[0.0, 3.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
bound_check(np.array([[1, 1]]), [1], C)

# Without monotone decisions the bound can fail. Here truth 1, decisions
# `[0, 1]` decode to rank 2 at cost 5, yet only one cheap task is wrong.

C = np.array([[0.0, 5.0, 6.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
bound_check(np.array([[0, 1]]), [1], C)
