"""End-to-end runs: build data, train one head, evaluate on test.

Shared by the command line and by the benchmark scripts so both exercise the
same code path.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

from .data import Dataset, SplitPlan, Standardizer, generate_synthetic, load_csv, normalize, split
from .metrics import EvalReport, audit_split, named_cost_matrix
from .model import OrdinalModel, init_model
from .optim import TrainConfig, TrainResult, train

__all__ = [
    "RunConfig",
    "RunOutcome",
    "load_dataset",
    "prepare_splits",
    "run_training",
    "standardizer_from_model",
    "apply_model_transform",
]


@dataclass(frozen=True)
class RunConfig:
    """Everything one training run depends on. Unknown keys are rejected by :meth:`from_dict`."""

    dataset: str | None = None
    header: bool = False
    ranks: int = 6
    n: int = 2000
    d: int = 4
    noise_sd: float = 0.1
    data_seed: int = 0
    split: tuple[float, float, float] = (0.7, 0.1, 0.2)
    split_seed: int = 0
    normalize: bool = True
    head: str = "coral"
    epochs: int = 200
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0
    lam: tuple[float, ...] | None = None
    hidden: tuple[int, ...] = (32, 16)
    normalize_loss: bool = True
    costs: tuple[str, ...] = ("absolute", "classification")

    def __post_init__(self) -> None:
        object.__setattr__(self, "split", tuple(float(x) for x in self.split))
        object.__setattr__(self, "hidden", tuple(int(x) for x in self.hidden))
        object.__setattr__(self, "costs", tuple(self.costs))
        if self.lam is not None:
            object.__setattr__(self, "lam", tuple(float(x) for x in self.lam))
        if len(self.split) != 3:
            raise ValueError("split needs three fractions")
        SplitPlan(*self.split, seed=self.split_seed)
        self.train_config()

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            seed=self.seed,
            head=self.head,
            lam=self.lam,
            normalize_loss=self.normalize_loss,
            hidden=self.hidden,
        )

    def split_plan(self) -> SplitPlan:
        return SplitPlan(*self.split, seed=self.split_seed)


@dataclass
class RunOutcome:
    config: RunConfig
    result: TrainResult
    report: EvalReport
    standardizer: Standardizer | None
    splits: tuple[Dataset, Dataset, Dataset] = field(repr=False)

    @property
    def model(self) -> OrdinalModel:
        return self.result.model


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.dataset is not None:
        return load_csv(cfg.dataset, cfg.ranks, header=cfg.header)
    return generate_synthetic(cfg.data_seed, cfg.n, cfg.d, cfg.ranks, cfg.noise_sd)


def prepare_splits(cfg: RunConfig, dataset: Dataset | None = None):
    """Train/validation/test splits, standardised on train when requested."""
    ds = load_dataset(cfg) if dataset is None else dataset
    parts = split(ds, cfg.split_plan())
    if not cfg.normalize:
        return parts, None
    normed, std = normalize(*parts)
    return tuple(normed), std


def run_training(cfg: RunConfig, dataset: Dataset | None = None) -> RunOutcome:
    (tr, va, te), std = prepare_splits(cfg, dataset)
    model = init_model(tr.d, tr.K, cfg.head, cfg.hidden, seed=cfg.seed)
    result = train(model, tr, va, cfg.train_config(), test_split=te)
    meta = {"config": cfg.to_dict(), "best_epoch": result.best_epoch}
    if std is not None:
        meta["standardizer"] = std.to_dict()
    best = OrdinalModel(result.model.body, result.model.head, meta)
    result.model = best
    costs = {name: named_cost_matrix(name, tr.K) for name in cfg.costs}
    report = audit_split(best, te, costs)
    return RunOutcome(cfg, result, report, std, (tr, va, te))


def standardizer_from_model(model: OrdinalModel) -> Standardizer | None:
    data = model.metadata.get("standardizer")
    return None if data is None else Standardizer.from_dict(data)


def apply_model_transform(model: OrdinalModel, dataset: Dataset) -> Dataset:
    std = standardizer_from_model(model)
    return dataset if std is None else std.apply(dataset)
