# ---
# jupyter:
#   jupytext:
#     formats: py:light
#     text_representation:
#       extension: .py
#       format_name: light
# ---

# # Ranks as binary tasks
#
# A rank q out of K becomes K-1 binary targets, one per threshold:
# task k asks "is the rank above k?".

import numpy as np

from coral_ordinal import count_inconsistencies, decode_rank, extend_label, threshold_probs

K = 5
for q in range(1, K + 1):
    y = extend_label(q, K)
    print(q, y, "->", decode_rank(y))

# Decoding only counts the ones, so it never fails. A vector like `[1, 0, 1, 0]`
# still decodes to 3, but it claims "above 3" while denying "above 2".

f = np.array([1, 0, 1, 0])
decode_rank(f), count_inconsistencies(f)

# Thresholding is strict: 0.5 is a "no".

threshold_probs([0.9, 0.5, 0.51, 0.1])
