"""Ordinal datasets: CSV input/output, splitting, standardisation and a
synthetic latent-threshold generator."""
from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import RankSpec, extend_labels

__all__ = [
    "Dataset",
    "DataFormatError",
    "SplitPlan",
    "Standardizer",
    "load_csv",
    "write_csv",
    "split",
    "normalize",
    "generate_synthetic",
]


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray  # (N, d)
    labels: np.ndarray  # (N,) rank indices 1..K
    spec: RankSpec
    provenance: str = ""
    # noiseless/noisy latent scores when the data is synthetic
    latent: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        X = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError(f"features {X.shape} and labels {y.shape} do not line up")
        if X.shape[0] < 1:
            raise ValueError("a dataset needs at least one example")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if not np.all(y == np.round(y)) or y.min() < 1 or y.max() > self.spec.K:
            raise ValueError(f"labels must be rank indices in 1..{self.spec.K}")
        X.setflags(write=False)
        y = y.astype(np.int64)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def N(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def K(self) -> int:
        return self.spec.K

    def subset(self, idx) -> "Dataset":
        latent = None if self.latent is None else np.asarray(self.latent)[idx]
        return replace(self, features=self.features[idx], labels=self.labels[idx], latent=latent)

    def extended_targets(self) -> np.ndarray:
        return extend_labels(self.labels, self.spec)


def load_csv(
    path: str | os.PathLike,
    n_ranks: int,
    header: bool = False,
    delimiter: str = ",",
) -> Dataset:
    """Read ``d`` feature columns followed by one integer rank column per line.

    Blank lines are skipped. Errors name the 1-based line (and column) at fault.
    """
    spec = RankSpec.from_k(n_ranks)
    rows: list[list[float]] = []
    labels: list[int] = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise DataFormatError(f"line {lineno}: need at least one feature and a label")
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataFormatError(f"line {lineno}: expected {width} columns, got {len(row)}")
            feats = []
            for col, cell in enumerate(row[:-1], start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataFormatError(f"line {lineno}, column {col}: cannot parse {cell!r}") from None
                if not np.isfinite(v):
                    raise DataFormatError(f"line {lineno}, column {col}: non-finite value")
                feats.append(v)
            cell = row[-1].strip()
            try:
                q = int(cell)
            except ValueError:
                raise DataFormatError(f"line {lineno}, column {len(row)}: label {cell!r} is not an integer") from None
            if not 1 <= q <= spec.K:
                raise DataFormatError(f"line {lineno}: label {q} outside 1..{spec.K}")
            rows.append(feats)
            labels.append(q)
    if not rows:
        raise DataFormatError(f"{path}: no examples")
    return Dataset(np.array(rows), np.array(labels), spec, provenance=str(path))


def write_csv(dataset: Dataset, path: str | os.PathLike, header: bool = False) -> None:
    """Write ``dataset`` in the format :func:`load_csv` reads (floats at repr precision)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow([f"x{j + 1}" for j in range(dataset.d)] + ["rank"])
        for x, q in zip(dataset.features, dataset.labels):
            w.writerow([repr(float(v)) for v in x] + [int(q)])
    os.replace(tmp, path)


@dataclass(frozen=True)
class SplitPlan:
    train: float = 0.7
    val: float = 0.1
    test: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        fr = (self.train, self.val, self.test)
        if min(fr) <= 0:
            raise ValueError("split fractions must be positive")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {sum(fr)}, not 1")

    def sizes(self, n: int) -> tuple[int, int, int]:
        n_val = int(round(self.val * n))
        n_test = int(round(self.test * n))
        n_train = n - n_val - n_test
        if min(n_train, n_val, n_test) < 1:
            raise ValueError(f"split {self.train}/{self.val}/{self.test} of {n} examples leaves an empty part")
        return n_train, n_val, n_test


def split(dataset: Dataset, plan: SplitPlan = SplitPlan()) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded permutation, then contiguous train/validation/test slices."""
    n_train, n_val, _ = plan.sizes(dataset.N)
    perm = np.random.default_rng(plan.seed).permutation(dataset.N)
    return (
        dataset.subset(perm[:n_train]),
        dataset.subset(perm[n_train : n_train + n_val]),
        dataset.subset(perm[n_train + n_val :]),
    )


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-feature affine map fitted on training data (population variance)."""

    mean: np.ndarray
    scale: np.ndarray  # 0 marks a constant feature, mapped to 0

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        constant = sd == 0
        if np.any(constant):
            warnings.warn(
                f"zero-variance feature(s) {np.flatnonzero(constant).tolist()} mapped to 0",
                RuntimeWarning,
                stacklevel=3,
            )
        return cls(mean, sd)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        safe = np.where(self.scale == 0, 1.0, self.scale)
        return np.where(self.scale == 0, 0.0, (X - self.mean) / safe)

    def apply(self, dataset: Dataset) -> Dataset:
        return replace(dataset, features=self.transform(dataset.features))

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Standardizer":
        return cls(np.array(data["mean"], dtype=np.float64), np.array(data["scale"], dtype=np.float64))


def normalize(train: Dataset, *others: Dataset) -> tuple[list[Dataset], Standardizer]:
    """Standardise every dataset with statistics from ``train`` only."""
    t = Standardizer.fit(train.features)
    return [t.apply(ds) for ds in (train, *others)], t


def generate_synthetic(
    seed: int,
    N: int,
    d: int,
    K: int,
    noise_sd: float = 0.1,
    max_retries: int = 100,
) -> Dataset:
    """Latent-threshold ordinal data.

    ``x ~ U[-1, 1]^d``, ``t = <w, x> + N(0, noise_sd^2)`` with ``w = 1/sqrt(d)``
    in every coordinate, and the rank is the bucket of ``t`` among K equal-width
    bins spanning ``[min t, max t]``. Draws are repeated until every rank
    occurs, which also makes every binary task two-class.
    """
    if K < 2 or d < 1:
        raise ValueError("need K >= 2 and d >= 1")
    if N < 10 * K:
        raise ValueError(f"need N >= 10*K = {10 * K}, got {N}")
    if noise_sd < 0:
        raise ValueError("noise_sd must be non-negative")
    rng = np.random.default_rng(seed)
    w = np.full(d, 1.0 / np.sqrt(d))
    for _ in range(max_retries):
        X = rng.uniform(-1.0, 1.0, size=(N, d))
        t = X @ w + noise_sd * rng.standard_normal(N)
        thresholds = np.linspace(t.min(), t.max(), K + 1)[1:-1]
        ranks = 1 + np.sum(t[:, None] > thresholds[None, :], axis=1)
        if np.unique(ranks).size == K:
            return Dataset(
                X,
                ranks,
                RankSpec.from_k(K),
                provenance=f"synthetic(seed={seed}, N={N}, d={d}, K={K}, noise_sd={noise_sd})",
                latent=t,
            )
    raise RuntimeError(f"could not cover all {K} ranks in {max_retries} draws")
