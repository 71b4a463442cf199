"""Rank labels, binary label extension and rank decoding.

Rank indices are 1-based everywhere in the public API (q in 1..K). Arrays of
binary task outputs are ordinary 0-based numpy vectors of length K-1, so task
``k`` (1-based) lives at position ``k - 1``. That conversion happens only in
this module.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

__all__ = [
    "RankSpec",
    "extend_label",
    "extend_labels",
    "decode_rank",
    "decode_ranks",
    "threshold_probs",
    "is_rank_monotone",
    "count_inconsistencies",
    "count_inverted_pairs",
    "inconsistency_counts",
]


@dataclass(frozen=True)
class RankSpec:
    """Ordered label set r_1 < r_2 < ... < r_K."""

    labels: tuple[Hashable, ...]

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise ValueError(f"need at least 2 ranks, got {len(labels)}")
        if len(set(labels)) != len(labels):
            raise ValueError("rank labels must be distinct")

    @classmethod
    def from_k(cls, k: int) -> "RankSpec":
        return cls(tuple(range(1, int(k) + 1)))

    @property
    def K(self) -> int:
        return len(self.labels)

    def index_of(self, label: Hashable) -> int:
        """1-based rank index of ``label``."""
        try:
            return self.labels.index(label) + 1
        except ValueError:
            raise ValueError(f"unknown rank label {label!r}") from None

    def label_of(self, q: int) -> Hashable:
        _check_index(q, self.K)
        return self.labels[q - 1]


def _as_k(spec: RankSpec | int) -> int:
    k = spec.K if isinstance(spec, RankSpec) else int(spec)
    if k < 2:
        raise ValueError(f"need at least 2 ranks, got {k}")
    return k


def _check_index(q, k: int) -> None:
    if isinstance(q, (bool, np.bool_)) or int(q) != q:
        raise ValueError(f"rank index must be an integer, got {q!r}")
    if not 1 <= q <= k:
        raise ValueError(f"rank index {q} outside 1..{k}")


def extend_label(q: int, spec: RankSpec | int) -> np.ndarray:
    """Binary targets ``y[k] = 1{q > k}`` for tasks k = 1..K-1."""
    k = _as_k(spec)
    _check_index(q, k)
    return (int(q) > np.arange(1, k)).astype(np.int8)


def extend_labels(ranks: Sequence[int] | np.ndarray, spec: RankSpec | int) -> np.ndarray:
    """Row-wise :func:`extend_label` for a batch of rank indices, shape (N, K-1)."""
    k = _as_k(spec)
    ranks = np.asarray(ranks)
    if ranks.ndim != 1:
        raise ValueError("ranks must be a 1-D sequence")
    if ranks.size and (not np.all(ranks == np.round(ranks)) or ranks.min() < 1 or ranks.max() > k):
        raise ValueError(f"rank indices must be integers in 1..{k}")
    return (ranks[:, None] > np.arange(1, k)[None, :]).astype(np.int8)


def _as_bits(f) -> np.ndarray:
    f = np.asarray(f)
    if f.ndim != 1 or f.size < 1:
        raise ValueError("binary decisions must be a non-empty 1-D vector")
    if not np.all((f == 0) | (f == 1)):
        raise ValueError("binary decisions must contain only 0 and 1")
    return f.astype(np.int64)


def decode_rank(f) -> int:
    """Rank index ``1 + sum(f)``; inconsistent vectors are decoded the same way."""
    return 1 + int(_as_bits(f).sum())


def decode_ranks(F) -> np.ndarray:
    F = np.asarray(F)
    if F.ndim != 2:
        raise ValueError("expected a (N, K-1) decision matrix")
    if not np.all((F == 0) | (F == 1)):
        raise ValueError("binary decisions must contain only 0 and 1")
    return 1 + F.astype(np.int64).sum(axis=1)


def threshold_probs(p) -> np.ndarray:
    """Decisions ``1{p > 0.5}``; exactly 0.5 maps to 0.

    Works on a single vector or a (N, K-1) matrix.
    """
    p = np.asarray(p, dtype=np.float64)
    if not np.all((p >= 0.0) & (p <= 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    return (p > 0.5).astype(np.int8)


def is_rank_monotone(f) -> bool:
    f = _as_bits(f)
    return bool(np.all(f[:-1] >= f[1:]))


def count_inconsistencies(f) -> int:
    """Number of adjacent positions where a 0 is followed by a 1."""
    f = _as_bits(f)
    return int(np.sum((f[:-1] == 0) & (f[1:] == 1)))


def count_inverted_pairs(f) -> int:
    """Number of pairs i < j with f[i] < f[j] (all pairs, not just adjacent)."""
    f = _as_bits(f)
    zeros_before = np.cumsum(f == 0) - (f == 0)
    return int(np.sum(zeros_before[f == 1]))


def inconsistency_counts(F) -> np.ndarray:
    """Per-row :func:`count_inconsistencies` for a (N, K-1) decision matrix."""
    F = np.asarray(F)
    if F.ndim != 2:
        raise ValueError("expected a (N, K-1) decision matrix")
    return np.sum((F[:, :-1] == 0) & (F[:, 1:] == 1), axis=1).astype(np.int64)
