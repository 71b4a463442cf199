"""Randomised checks used by the command line: gradient checking, ordered
biases at the bias-only optimum, and random instances for the cost bound."""
from __future__ import annotations

import numpy as np

from .core import extend_label
from .losses import finite_difference_grad, loss_and_grad, max_relative_error, model_loss
from .model import OrdinalModel, init_model
from .optim import optimize_biases_only

__all__ = [
    "gradcheck_case",
    "gradcheck",
    "ordered_bias_instance",
    "ordered_bias_trials",
    "biases_ordered",
    "random_v_shaped_cost",
    "random_monotone_decisions",
]

GRADCHECK_TOL = 1e-6
ORDER_TOL = 1e-9


def gradcheck_case(seed: int, head: str) -> tuple[OrdinalModel, np.ndarray, np.ndarray, np.ndarray | None]:
    """Random small model and batch: d <= 8, h <= 16, K <= 6, N <= 32."""
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 9))
    K = int(rng.integers(2, 7))
    hidden = (int(rng.integers(2, 17)), int(rng.integers(1, 17)))
    N = int(rng.integers(1, 33))
    model = init_model(d, K, head, hidden, seed=rng)
    # perturb so that biases are non-zero and ReLUs sit in both regimes
    model = model.with_flat(model.flat() + rng.normal(0.0, 0.5, model.flat().size))
    X = rng.normal(size=(N, d))
    ranks = rng.integers(1, K + 1, size=N)
    lam = None if head == "ce" else rng.uniform(0.2, 3.0, size=K - 1)
    return model, X, ranks, lam


def gradcheck(seed: int, head: str, step: float = 1e-6) -> float:
    """Max relative error between analytic and central-difference gradients."""
    model, X, ranks, lam = gradcheck_case(seed, head)
    kw = {} if lam is None else {"lam": lam}
    _, analytic = loss_and_grad(model, X, ranks, **kw)
    numeric = finite_difference_grad(model_loss, model, X, ranks, step=step, **kw)
    return max_relative_error(analytic, numeric)


def ordered_bias_instance(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scores, extended targets and positive task weights with every rank present."""
    K = int(rng.integers(3, 9))
    N = int(rng.integers(50, 201))
    scores = rng.normal(0.0, rng.uniform(0.1, 3.0), size=N)
    # ranks loosely follow the scores so both easy and hard instances occur
    noisy = scores + rng.normal(0.0, rng.uniform(0.1, 5.0), size=N)
    ranks = 1 + np.searchsorted(np.sort(noisy)[np.linspace(0, N - 1, K + 1).astype(int)[1:-1]], noisy)
    ranks[:K] = rng.permutation(np.arange(1, K + 1))
    targets = np.stack([extend_label(int(q), K) for q in ranks])
    lam = rng.uniform(0.05, 10.0, size=K - 1)
    return scores, targets, lam


def ordered_bias_trials(trials: int, seed: int = 0, tol: float = 1e-10) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        scores, targets, lam = ordered_bias_instance(rng)
        out.append(optimize_biases_only(scores, targets, lam, tol=tol))
    return out


def biases_ordered(b: np.ndarray, tol: float = ORDER_TOL) -> bool:
    return bool(np.all(b[:-1] >= b[1:] - tol))


def random_v_shaped_cost(rng: np.random.Generator, K: int) -> np.ndarray:
    """Rows fall strictly toward the diagonal zero and rise strictly after it."""
    C = np.zeros((K, K))
    for y in range(K):
        left = np.cumsum(rng.uniform(0.05, 3.0, size=y))[::-1]
        right = np.cumsum(rng.uniform(0.05, 3.0, size=K - 1 - y))
        C[y, :y] = left
        C[y, y + 1 :] = right
    return C


def random_monotone_decisions(rng: np.random.Generator, K: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Truth ranks and rank-monotone decision vectors (decoded ranks drawn at random)."""
    truths = rng.integers(1, K + 1, size=N)
    # mostly near the truth, sometimes anywhere
    pred = np.clip(truths + rng.integers(-2, 3, size=N), 1, K)
    wild = rng.random(N) < 0.2
    pred[wild] = rng.integers(1, K + 1, size=int(wild.sum()))
    F = np.stack([extend_label(int(q), K) for q in pred])
    return truths, F
