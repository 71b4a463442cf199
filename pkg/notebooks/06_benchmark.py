# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Three heads on the synthetic benchmark
#
# N=2000, d=4, K=6, latent noise 0.1, 70/10/20 split, same body for every head.
# The full run (200 epochs, 9 trainings) takes about 15 s.

# + tags=["parameters"]
EPOCHS = 200
SEEDS = (0, 1, 2)
# -

from coral_ordinal.data import generate_synthetic, split
from coral_ordinal.metrics import mae
from coral_ordinal.pipeline import RunConfig, run_training

rows = []
for seed in SEEDS:
    for head in ("coral", "or", "ce"):
        out = run_training(RunConfig(head=head, seed=seed, epochs=EPOCHS))
        inc = out.report.inconsistency
        rows.append((seed, head, out.report.mae, out.result.best_epoch, None if inc is None else inc["all"]))
        print(*rows[-1])

# How good can any model be? Thresholding the latent score itself (which still
# carries the label noise) gives a floor for test MAE.

ds = generate_synthetic(0, 2000, 4, 6, 0.1)
test = split(ds, RunConfig().split_plan())[2]
t = (test.features @ ([0.5] * 4))
lo, hi = ds.latent.min(), ds.latent.max()
cuts = [lo + (hi - lo) * k / 6 for k in range(1, 6)]
pred = 1 + sum((t > c).astype(int) for c in cuts)
print("noiseless-score threshold MAE:", mae(test.labels, pred))

# All three heads sit within a few test examples of that floor (one example
# is 0.0025 MAE), so their ordering here is noise. The OR head ends with no
# inconsistent decisions at all on this easy, nearly linear problem; after a
# single epoch it does show them:

for seed in SEEDS:
    out = run_training(RunConfig(head="or", seed=seed, epochs=1))
    print(seed, out.report.inconsistency)
