"""Rank-consistent ordinal regression for small neural networks.

A numpy implementation of the CORAL output layer (one shared weight vector,
K-1 ordered biases), the per-task-weight OR head and a softmax baseline, with
hand-derived gradients, Adam training and checks for the ordered-bias and
cost-bound properties.
"""
from .core import (
    RankSpec,
    count_inconsistencies,
    count_inverted_pairs,
    decode_rank,
    decode_ranks,
    extend_label,
    extend_labels,
    inconsistency_counts,
    is_rank_monotone,
    threshold_probs,
)
from .data import Dataset, SplitPlan, generate_synthetic, load_csv, normalize, split, write_csv
from .losses import coral_loss, finite_difference_grad, loss_and_grad, model_loss
from .metrics import audit_split, bound_check, cost_matrix_kind, mae, rmse
from .model import OrdinalModel, init_model, load_model, save_model
from .optim import TrainConfig, optimize_biases_only, train

__version__ = "0.1.0"
