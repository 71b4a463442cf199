# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Checking backpropagation against finite differences
#
# Relative error is |a - n| / max(1, |a|, |n|), central differences with step 1e-6.

import numpy as np

from coral_ordinal.losses import finite_difference_grad, loss_and_grad, max_relative_error, model_loss
from coral_ordinal.verify import gradcheck, gradcheck_case

model, X, ranks, lam = gradcheck_case(seed=0, head="coral")
print(model.kind, "N =", len(X), "d =", X.shape[1], "K =", model.K)

kw = {} if lam is None else {"lam": lam}
loss, analytic = loss_and_grad(model, X, ranks, **kw)
numeric = finite_difference_grad(model_loss, model, X, ranks, **kw)
for name, a, n in zip(model.parameter_names(), analytic, numeric):
    print(f"{name:22s} {np.max(np.abs(a - n)):.2e}")

# The same check over 20 seeds per head:

for head in ("coral", "or", "ce"):
    print(head, max(gradcheck(s, head) for s in range(20)))
