"""Adam, the mini-batch training loop, and the bias-only CORAL solver."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .losses import coral_loss, loss_and_grad, model_loss, task_weights
from .model import HEAD_KINDS, OrdinalModel, sigmoid

__all__ = [
    "AdamState",
    "adam_step",
    "TrainConfig",
    "EpochRecord",
    "TrainResult",
    "TrainingDiverged",
    "DegenerateTaskError",
    "train",
    "evaluate_mae_rmse",
    "optimize_biases_only",
    "bias_objective",
]


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, batch: int, loss: float):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class DegenerateTaskError(ValueError):
    """Some binary task has only one label value, so its optimal bias is infinite."""

    def __init__(self, tasks: dict[int, str]):
        detail = ", ".join(f"task {k}: all {v}" for k, v in sorted(tasks.items()))
        super().__init__(f"bias optimum at infinity ({detail})")
        self.tasks = tasks


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], **hyper) -> "AdamState":
        return cls(
            m=[np.zeros_like(p, dtype=np.float64) for p in params],
            v=[np.zeros_like(p, dtype=np.float64) for p in params],
            **hyper,
        )


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> list[np.ndarray]:
    """One bias-corrected Adam update. Moments in ``state`` are updated in place;
    new parameter arrays are returned."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and optimizer state are not congruent")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise ValueError(f"gradient shape {np.shape(g)} != parameter shape {np.shape(p)}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[i] / bc1
        v_hat = state.v[i] / bc2
        out.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0
    head: str = "coral"
    lam: tuple[float, ...] | None = None
    # divide the summed batch loss by the batch size before stepping
    normalize_loss: bool = True
    hidden: tuple[int, ...] = (32, 16)
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (self.lr >= 0 and math.isfinite(self.lr)):
            raise ValueError("learning rate must be finite and non-negative")
        if self.head not in HEAD_KINDS:
            raise ValueError(f"unknown head {self.head!r}")
        if self.lam is not None:
            if self.head == "ce":
                raise ValueError("task weights do not apply to the CE head")
            object.__setattr__(self, "lam", tuple(float(x) for x in self.lam))
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_mae: float
    val_rmse: float
    test_mae: float | None = None
    test_rmse: float | None = None

    def to_record(self) -> dict:
        rec = {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_mae": self.val_mae,
            "val_rmse": self.val_rmse,
        }
        if self.test_mae is not None:
            rec["test_mae"] = self.test_mae
            rec["test_rmse"] = self.test_rmse
        return rec


@dataclass
class TrainResult:
    model: OrdinalModel
    log: list[EpochRecord]
    best_epoch: int
    final_model: OrdinalModel

    @property
    def best_val_mae(self) -> float:
        return self.log[self.best_epoch - 1].val_mae

    def biases_ordered(self) -> bool | None:
        """Whether the selected CORAL model has non-increasing biases (None for other heads)."""
        if self.model.kind != "coral":
            return None
        b = self.model.head.biases
        return bool(np.all(b[:-1] >= b[1:]))


def evaluate_mae_rmse(model: OrdinalModel, X, ranks) -> tuple[float, float]:
    err = model.predict(X) - np.asarray(ranks)
    return float(np.mean(np.abs(err))), float(np.sqrt(np.mean(err.astype(np.float64) ** 2)))


def _xy(split) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(split, "features"):
        return np.asarray(split.features, dtype=np.float64), np.asarray(split.labels)
    X, y = split
    return np.asarray(X, dtype=np.float64), np.asarray(y)


def train(model: OrdinalModel, train_split, val_split, config: TrainConfig, test_split=None) -> TrainResult:
    """Mini-batch Adam training with best-epoch selection on validation MAE.

    Splits are ``Dataset`` objects or ``(X, ranks)`` pairs. Ties in validation
    MAE keep the earliest epoch. When a test split is given its MAE/RMSE is
    logged per epoch but never used for selection.
    """
    X, y = _xy(train_split)
    Xv, yv = _xy(val_split)
    if len(y) == 0 or len(yv) == 0:
        raise ValueError("train and validation splits must be non-empty")
    if model.kind != config.head:
        raise ValueError(f"config head {config.head!r} does not match model head {model.kind!r}")
    test = _xy(test_split) if test_split is not None else None
    lam = None if config.lam is None else task_weights(config.lam, model.K - 1)

    rng = np.random.default_rng(config.seed)
    state = AdamState.for_params(
        model.parameters(), lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps
    )
    n = len(y)
    log: list[EpochRecord] = []
    best_model, best_mae, best_epoch = model, math.inf, 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        for b, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start : start + config.batch_size]
            loss, grads = loss_and_grad(model, X[idx], y[idx], lam)
            if not math.isfinite(loss):
                raise TrainingDiverged(epoch, b, loss)
            if config.normalize_loss:
                grads = [g / len(idx) for g in grads]
            model = model.with_parameters(adam_step(state, model.parameters(), grads))

        train_loss = model_loss(model, X, y, lam) / n
        if not math.isfinite(train_loss):
            raise TrainingDiverged(epoch, -1, train_loss)
        val_mae, val_rmse = evaluate_mae_rmse(model, Xv, yv)
        test_mae = test_rmse = None
        if test is not None:
            test_mae, test_rmse = evaluate_mae_rmse(model, *test)
        log.append(EpochRecord(epoch, train_loss, val_mae, val_rmse, test_mae, test_rmse))
        if val_mae < best_mae:
            best_model, best_mae, best_epoch = model, val_mae, epoch
    return TrainResult(best_model, log, best_epoch, model)


def bias_objective(scores, targets, biases, lam=None) -> float:
    """Summed binary cross-entropy as a function of the biases alone."""
    scores = np.asarray(scores, dtype=np.float64)
    z = scores[:, None] + np.asarray(biases, dtype=np.float64)[None, :]
    return coral_loss(z, targets, lam)


def _solve_task(g: np.ndarray, y: np.ndarray, weight: float, tol: float, max_iter: int) -> float:
    n1 = float(y.sum())
    n = y.size
    base = math.log(n1 / (n - n1))
    lo, hi = base - float(g.max()), base - float(g.min())
    if lo == hi:
        return lo

    def deriv(b):
        p = sigmoid(g + b)
        return weight * float(np.sum(p - y)), weight * float(np.sum(p * (1.0 - p)))

    b = 0.5 * (lo + hi)
    for _ in range(max_iter):
        d, curv = deriv(b)
        if abs(d) <= tol:
            return b
        if d > 0:
            hi = b
        else:
            lo = b
        # Newton step, fall back to bisection when it leaves the bracket
        step = b - d / curv if curv > 0 else math.nan
        b_new = step if lo < step < hi else 0.5 * (lo + hi)
        if b_new == b or not lo <= b_new <= hi:
            return b
        b = b_new
    return b


def optimize_biases_only(
    scores,
    targets,
    lam=None,
    tol: float = 1e-10,
    clamp: float | None = None,
    max_iter: int = 200,
) -> np.ndarray:
    """Minimise the CORAL loss over the biases with the scores held fixed.

    The objective separates into one strictly convex problem per task, whose
    stationarity condition is ``lam_k * sum_i (sigmoid(g_i + b_k) - y_ik) = 0``.
    Each is solved by Newton steps safeguarded by a bracketing bisection until
    ``|derivative| <= tol`` (or the bracket has collapsed to adjacent floats).

    ``targets`` is the (N, K-1) extended label matrix (see ``extend_labels``).

    A task whose labels are all 0 or all 1 has its optimum at -inf / +inf and
    raises :class:`DegenerateTaskError`, unless ``clamp`` is given, in which
    case such biases are set to ``-clamp`` / ``+clamp``.
    """
    g = np.asarray(scores, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    if g.ndim != 1 or Y.ndim != 2 or Y.shape[0] != g.size or g.size == 0:
        raise ValueError("need scores (N,) and extended targets (N, K-1)")
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    lam = task_weights(lam, Y.shape[1])
    out = np.empty(Y.shape[1])
    bad: dict[int, str] = {}
    for k in range(Y.shape[1]):
        ones = Y[:, k].sum()
        if ones == 0 or ones == g.size:
            label = "0" if ones == 0 else "1"
            if clamp is None:
                bad[k + 1] = label
            else:
                out[k] = -clamp if ones == 0 else clamp
            continue
        out[k] = _solve_task(g, Y[:, k], float(lam[k]), tol, max_iter)
    if bad:
        raise DegenerateTaskError(bad)
    return out
