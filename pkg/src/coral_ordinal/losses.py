"""Losses for the three heads, their hand-derived gradients, and a
central-difference gradient oracle.

Every loss here is a *sum* over the batch. The training loop decides whether to
rescale by batch size.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .core import extend_labels
from .model import OrdinalModel, _body_forward, _as_batch, sigmoid

__all__ = [
    "log_sigmoid",
    "log_one_minus_sigmoid",
    "task_weights",
    "coral_loss",
    "coral_loss_grad_logits",
    "ce_loss",
    "ce_loss_grad_logits",
    "model_loss",
    "loss_and_grad",
    "coral_grad",
    "or_loss",
    "or_grad",
    "ce_grad",
    "numeric_gradient",
    "finite_difference_grad",
    "max_relative_error",
]


def log_sigmoid(z):
    """``log(sigmoid(z))`` without overflow for either sign of ``z``."""
    z = np.asarray(z, dtype=np.float64)
    return np.minimum(z, 0.0) - np.log1p(np.exp(-np.abs(z)))


def log_one_minus_sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    return -np.maximum(z, 0.0) - np.log1p(np.exp(-np.abs(z)))


def task_weights(lam, n_tasks: int) -> np.ndarray:
    """Validate per-task importance weights; ``None`` means all ones."""
    if lam is None:
        return np.ones(n_tasks)
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (n_tasks,):
        raise ValueError(f"expected {n_tasks} task weights, got shape {lam.shape}")
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise ValueError("task weights must be finite and strictly positive")
    return lam


def _binary_inputs(logits, targets):
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if z.shape != y.shape or z.shape[0] == 0:
        raise ValueError(f"logits {z.shape} and targets {y.shape} must match and be non-empty")
    return z, y


def coral_loss(logits, targets, lam=None) -> float:
    """Weighted binary cross-entropy summed over examples and K-1 tasks.

    ``logits`` and ``targets`` have shape (N, K-1); targets are the extended
    binary labels. The same form serves the OR head.
    """
    z, y = _binary_inputs(logits, targets)
    lam = task_weights(lam, z.shape[1])
    per_term = log_sigmoid(z) * y + log_one_minus_sigmoid(z) * (1.0 - y)
    return float(-np.sum(per_term * lam))


def coral_loss_grad_logits(logits, targets, lam=None) -> np.ndarray:
    z, y = _binary_inputs(logits, targets)
    lam = task_weights(lam, z.shape[1])
    return lam * (sigmoid(z) - y)


def _ce_inputs(logits, ranks):
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    r = np.atleast_1d(np.asarray(ranks))
    if z.shape[0] != r.shape[0] or z.shape[0] == 0:
        raise ValueError("need one rank per row of logits")
    if r.min() < 1 or r.max() > z.shape[1]:
        raise ValueError(f"rank indices must be in 1..{z.shape[1]}")
    return z, r.astype(np.int64) - 1


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))


def ce_loss(logits, ranks) -> float:
    """Softmax cross-entropy against 1-based rank indices, summed over the batch."""
    z, idx = _ce_inputs(logits, ranks)
    return float(-np.sum(_log_softmax(z)[np.arange(z.shape[0]), idx]))


def ce_loss_grad_logits(logits, ranks) -> np.ndarray:
    z, idx = _ce_inputs(logits, ranks)
    p = np.exp(_log_softmax(z))
    p[np.arange(z.shape[0]), idx] -= 1.0
    return p


def model_loss(model: OrdinalModel, X, ranks, lam=None) -> float:
    z = model.logits(np.atleast_2d(X))
    if model.kind == "ce":
        return ce_loss(z, ranks)
    return coral_loss(z, extend_labels(ranks, model.K), lam)


def loss_and_grad(model: OrdinalModel, X, ranks, lam=None) -> tuple[float, list[np.ndarray]]:
    """Loss and its gradient, one array per entry of ``model.parameters()``."""
    X, _ = _as_batch(X, model.n_features)
    ranks = np.asarray(ranks)
    if ranks.shape != (X.shape[0],):
        raise ValueError("need exactly one rank per example")
    acts = _body_forward(model.body, X)
    g = acts[-1]
    head = model.head

    if model.kind == "coral":
        z = (g @ head.shared_weight)[:, None] + head.biases
        y = extend_labels(ranks, model.K)
        loss = coral_loss(z, y, lam)
        dz = coral_loss_grad_logits(z, y, lam)
        dscore = dz.sum(axis=1)
        head_grads = [g.T @ dscore, dz.sum(axis=0)]
        dg = np.outer(dscore, head.shared_weight)
    elif model.kind == "or":
        z = g @ head.weights.T + head.biases
        y = extend_labels(ranks, model.K)
        loss = coral_loss(z, y, lam)
        dz = coral_loss_grad_logits(z, y, lam)
        head_grads = [dz.T @ g, dz.sum(axis=0)]
        dg = dz @ head.weights
    else:
        if lam is not None:
            raise ValueError("task weights do not apply to the CE head")
        z = g @ head.weights.T + head.biases
        loss = ce_loss(z, ranks)
        dz = ce_loss_grad_logits(z, ranks)
        head_grads = [dz.T @ g, dz.sum(axis=0)]
        dg = dz @ head.weights

    body_grads: list[np.ndarray] = []
    d = dg
    for i in range(len(model.body.weights) - 1, -1, -1):
        body_grads = [acts[i].T @ d, d.sum(axis=0)] + body_grads
        if i > 0:
            d = (d @ model.body.weights[i].T) * (acts[i] > 0)
    return loss, body_grads + head_grads


def _require(model: OrdinalModel, kind: str) -> None:
    if model.kind != kind:
        raise ValueError(f"expected a {kind!r} model, got {model.kind!r}")


def coral_grad(model: OrdinalModel, X, ranks, lam=None) -> list[np.ndarray]:
    _require(model, "coral")
    return loss_and_grad(model, X, ranks, lam)[1]


def or_loss(model: OrdinalModel, X, ranks, lam=None) -> float:
    _require(model, "or")
    return model_loss(model, X, ranks, lam)


def or_grad(model: OrdinalModel, X, ranks, lam=None) -> list[np.ndarray]:
    _require(model, "or")
    return loss_and_grad(model, X, ranks, lam)[1]


def ce_grad(model: OrdinalModel, X, ranks) -> list[np.ndarray]:
    _require(model, "ce")
    return loss_and_grad(model, X, ranks)[1]


def numeric_gradient(f: Callable[[np.ndarray], float], theta, step: float = 1e-6) -> np.ndarray:
    """Central differences ``(f(t + h e_j) - f(t - h e_j)) / 2h`` for every coordinate."""
    if not step > 0:
        raise ValueError("step must be positive")
    theta = np.array(theta, dtype=np.float64, copy=True)
    grad = np.empty_like(theta)
    for j in range(theta.size):
        orig = theta[j]
        theta[j] = orig + step
        up = f(theta)
        theta[j] = orig - step
        down = f(theta)
        theta[j] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise FloatingPointError(f"non-finite loss while probing parameter {j}")
        grad[j] = (up - down) / (2.0 * step)
    return grad


def finite_difference_grad(
    loss_fn: Callable[..., float],
    model: OrdinalModel,
    X,
    ranks,
    step: float = 1e-6,
    **loss_kwargs,
) -> list[np.ndarray]:
    """Oracle gradient of ``loss_fn(model, X, ranks, **loss_kwargs)``, shaped like the parameters."""
    names = model.parameter_names()
    offsets = np.cumsum([0] + [p.size for p in model.parameters()])

    def f(theta):
        return loss_fn(model.with_flat(theta), X, ranks, **loss_kwargs)

    try:
        flat = numeric_gradient(f, model.flat(), step)
    except FloatingPointError as exc:
        j = int(str(exc).rsplit(" ", 1)[-1])
        k = int(np.searchsorted(offsets, j, side="right")) - 1
        raise FloatingPointError(f"{exc} ({names[k]}[{j - offsets[k]}])") from None
    shapes = [p.shape for p in model.parameters()]
    return [flat[a:b].reshape(s) for a, b, s in zip(offsets[:-1], offsets[1:], shapes)]


def max_relative_error(analytic: Sequence[np.ndarray], numeric: Sequence[np.ndarray]) -> float:
    """max |a - n| / max(1, |a|, |n|) over all entries."""
    a = np.concatenate([np.ravel(x) for x in analytic])
    n = np.concatenate([np.ravel(x) for x in numeric])
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / denom))
