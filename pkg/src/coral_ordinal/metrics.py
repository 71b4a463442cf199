"""Error metrics, cost matrices, the cost-weighted binary error bound, and
inconsistency audits."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import decode_ranks, extend_labels, inconsistency_counts

__all__ = [
    "mae",
    "rmse",
    "classification_cost",
    "absolute_cost",
    "validate_cost_matrix",
    "load_cost_matrix",
    "named_cost_matrix",
    "row_is_v_shaped",
    "row_is_convex",
    "CostMatrixKind",
    "cost_matrix_kind",
    "bound_check",
    "EvalReport",
    "audit_split",
]


def _paired(truth, pred) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(truth, dtype=np.float64)
    p = np.asarray(pred, dtype=np.float64)
    if t.ndim != 1 or t.shape != p.shape:
        raise ValueError(f"truth {t.shape} and predictions {p.shape} must be equal-length vectors")
    if t.size == 0:
        raise ValueError("cannot score an empty set")
    return t, p


def mae(truth, pred) -> float:
    t, p = _paired(truth, pred)
    return float(np.mean(np.abs(t - p)))


def rmse(truth, pred) -> float:
    t, p = _paired(truth, pred)
    return float(np.sqrt(np.mean((t - p) ** 2)))


def classification_cost(K: int) -> np.ndarray:
    return 1.0 - np.eye(K)


def absolute_cost(K: int) -> np.ndarray:
    r = np.arange(1, K + 1, dtype=np.float64)
    return np.abs(r[:, None] - r[None, :])


def validate_cost_matrix(C) -> np.ndarray:
    """Zero diagonal, strictly positive off-diagonal, square, finite."""
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] < 2:
        raise ValueError(f"cost matrix must be K x K with K >= 2, got {C.shape}")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be finite")
    if np.any(np.diag(C) != 0):
        raise ValueError("cost matrix diagonal must be zero")
    off = ~np.eye(C.shape[0], dtype=bool)
    if np.any(C[off] <= 0):
        raise ValueError("off-diagonal costs must be positive")
    return C


def load_cost_matrix(path) -> np.ndarray:
    """Whitespace- or comma-separated K x K grid, one row per true rank."""
    text = Path(path).read_text().replace(",", " ")
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    try:
        C = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    return validate_cost_matrix(C)


def named_cost_matrix(name: str, K: int) -> np.ndarray:
    if name == "classification":
        return classification_cost(K)
    if name == "absolute":
        return absolute_cost(K)
    raise ValueError(f"unknown cost preset {name!r}")


def row_is_v_shaped(row, y: int) -> bool:
    """Non-increasing up to the true rank ``y`` (1-based), non-decreasing after it."""
    row = np.asarray(row, dtype=np.float64)
    left, right = row[:y], row[y - 1 :]
    return bool(np.all(np.diff(left) <= 0) and np.all(np.diff(right) >= 0))


def row_is_convex(row) -> bool:
    """Consecutive differences are non-decreasing."""
    return bool(np.all(np.diff(np.asarray(row, dtype=np.float64), n=2) >= 0))


@dataclass(frozen=True)
class CostMatrixKind:
    classification: bool
    absolute: bool
    v_shaped: bool
    convex_rows: bool


def cost_matrix_kind(C) -> CostMatrixKind:
    C = validate_cost_matrix(C)
    K = C.shape[0]
    return CostMatrixKind(
        classification=bool(np.array_equal(C, classification_cost(K))),
        absolute=bool(np.array_equal(C, absolute_cost(K))),
        v_shaped=all(row_is_v_shaped(C[y - 1], y) for y in range(1, K + 1)),
        convex_rows=all(row_is_convex(r) for r in C),
    )


def bound_check(decisions, truths, C) -> tuple[float, float]:
    """Sample means of both sides of the cost reduction bound.

    lhs = mean_i C[y_i, h(x_i)] with h(x) = 1 + sum_k f_k(x).
    rhs = mean_i sum_k |C[y_i, k] - C[y_i, k+1]| * 1{f_k(x_i) != y_i^(k)}.

    lhs <= rhs holds example by example whenever every decision vector is
    rank-monotone; otherwise the two numbers are still returned.
    """
    F = np.asarray(decisions)
    y = np.asarray(truths, dtype=np.int64)
    C = validate_cost_matrix(C)
    K = C.shape[0]
    if F.ndim != 2 or F.shape != (y.size, K - 1) or y.size == 0:
        raise ValueError(f"need decisions (N, {K - 1}) and N truths")
    pred = decode_ranks(F)
    rows = C[y - 1]
    lhs = rows[np.arange(y.size), pred - 1]
    weights = np.abs(rows[:, :-1] - rows[:, 1:])
    wrong = F != extend_labels(y, K)
    rhs = np.sum(weights * wrong, axis=1)
    return float(np.mean(lhs)), float(np.mean(rhs))


@dataclass
class EvalReport:
    n: int
    mae: float
    rmse: float
    # None for heads without binary tasks (CE); inner None means "no examples"
    inconsistency: dict | None = None
    inverted_pairs_mean: float | None = None
    n_correct: int = 0
    n_incorrect: int = 0
    bounds: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec: dict = {"n": self.n, "mae": self.mae, "rmse": self.rmse,
                     "n_correct": self.n_correct, "n_incorrect": self.n_incorrect}
        if self.inconsistency is not None:
            rec["inconsistency_all"] = self.inconsistency["all"]
            rec["inconsistency_correct"] = self.inconsistency["correct"]
            rec["inconsistency_incorrect"] = self.inconsistency["incorrect"]
            rec["inverted_pairs_mean"] = self.inverted_pairs_mean
        if self.bounds:
            rec["bounds"] = {k: dict(v) for k, v in self.bounds.items()}
        return rec


def _mean_or_none(v: np.ndarray) -> float | None:
    return float(np.mean(v)) if v.size else None


def _inverted_pairs(F: np.ndarray) -> np.ndarray:
    zeros_before = np.cumsum(F == 0, axis=1) - (F == 0)
    return np.sum(zeros_before * (F == 1), axis=1)


def audit_split(model, dataset, costs: dict | None = None) -> EvalReport:
    """Score ``model`` on ``dataset`` and count rank inconsistencies.

    ``costs`` maps names to cost matrices; each gets a bound entry with lhs,
    rhs and whether every decision vector was rank-monotone. Bounds need
    binary task outputs and are skipped for the CE head.
    """
    X = np.asarray(dataset.features, dtype=np.float64)
    y = np.asarray(dataset.labels, dtype=np.int64)
    pred = model.predict(X)
    correct = pred == y
    report = EvalReport(
        n=int(y.size),
        mae=mae(y, pred),
        rmse=rmse(y, pred),
        n_correct=int(correct.sum()),
        n_incorrect=int((~correct).sum()),
    )
    F = model.decisions(X)
    if F is None:
        return report
    counts = inconsistency_counts(F)
    report.inconsistency = {
        "all": float(np.mean(counts)),
        "correct": _mean_or_none(counts[correct]),
        "incorrect": _mean_or_none(counts[~correct]),
    }
    report.inverted_pairs_mean = float(np.mean(_inverted_pairs(F)))
    monotone = bool(np.all(counts == 0))
    for name, C in (costs or {}).items():
        lhs, rhs = bound_check(F, y, C)
        report.bounds[name] = {"lhs": lhs, "rhs": rhs, "rank_monotone": monotone,
                               "holds": bool(lhs <= rhs + 1e-12)}
    return report
