"""MLP feature extractor with interchangeable ordinal output heads.

Three heads share the same body:

* ``coral`` -- one weight vector shared by all K-1 binary tasks plus K-1
  independent biases. Ordered biases give ordered probabilities for every input.
* ``or`` -- one weight vector per task (the classic extended binary
  classification head). Nothing ties the tasks together.
* ``ce`` -- a plain K-way softmax classifier.

All arithmetic is float64. Models are immutable; training produces new models
through :meth:`OrdinalModel.with_parameters`.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence, Union

import numpy as np

from .core import decode_ranks, threshold_probs

__all__ = [
    "HEAD_KINDS",
    "MlpParams",
    "CoralHead",
    "OrHead",
    "CeHead",
    "OrdinalModel",
    "sigmoid",
    "forward_features",
    "coral_logits",
    "coral_probs",
    "or_logits",
    "ce_logits",
    "ce_predict",
    "init_mlp",
    "init_model",
    "save_model",
    "model_to_dict",
    "model_from_dict",
    "load_model",
    "MODEL_FORMAT",
    "MODEL_FORMAT_VERSION",
]

HEAD_KINDS = ("coral", "or", "ce")
MODEL_FORMAT = "coral-ordinal-model"
MODEL_FORMAT_VERSION = 1


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def sigmoid(z):
    """Logistic function that never overflows.

    Uses ``exp(z) / (1 + exp(z))`` for negative inputs so that ``exp`` is only
    ever called on non-positive arguments.
    """
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass(frozen=True, eq=False)
class MlpParams:
    """Dense layers ``d -> sizes[1] -> ... -> h``.

    ``weights[i]`` has shape (fan_in, fan_out). ReLU follows every layer except
    the last one, whose output is the penultimate representation g(x).
    """

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        ws = tuple(_frozen(w) for w in self.weights)
        bs = tuple(_frozen(b) for b in self.biases)
        if not ws or len(ws) != len(bs):
            raise ValueError("need one bias vector per weight matrix and at least one layer")
        for i, (w, b) in enumerate(zip(ws, bs)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: weight {w.shape} incompatible with bias {b.shape}")
            if i and ws[i - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {i}: fan_in {w.shape[0]} != previous fan_out {ws[i - 1].shape[1]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i}: non-finite parameters")
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    @property
    def width(self) -> int:
        return self.weights[-1].shape[1]


def _as_batch(x, d: int) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != d:
        raise ValueError(f"expected feature dimension {d}, got shape {x.shape}")
    return X, single


def _body_forward(params: MlpParams, X: np.ndarray) -> list[np.ndarray]:
    """Activations of every layer; ``acts[0]`` is the input, ``acts[-1]`` is g."""
    acts = [X]
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = acts[-1] @ w + b
        if i < last:
            a = np.maximum(a, 0.0)
        acts.append(a)
    return acts


def forward_features(params: MlpParams, x) -> np.ndarray:
    """Penultimate representation g(x) for one vector or a batch of rows."""
    X, single = _as_batch(x, params.n_features)
    g = _body_forward(params, X)[-1]
    return g[0] if single else g


@dataclass(frozen=True, eq=False)
class CoralHead:
    shared_weight: np.ndarray
    biases: np.ndarray

    def __post_init__(self) -> None:
        w, b = _frozen(self.shared_weight), _frozen(self.biases)
        if w.ndim != 1 or b.ndim != 1 or b.size < 1:
            raise ValueError("shared_weight and biases must be non-empty vectors")
        object.__setattr__(self, "shared_weight", w)
        object.__setattr__(self, "biases", b)

    @property
    def K(self) -> int:
        return self.biases.size + 1

    @property
    def width(self) -> int:
        return self.shared_weight.size


@dataclass(frozen=True, eq=False)
class OrHead:
    weights: np.ndarray  # (K-1, h)
    biases: np.ndarray

    def __post_init__(self) -> None:
        w, b = _frozen(self.weights), _frozen(self.biases)
        if w.ndim != 2 or b.shape != (w.shape[0],) or b.size < 1:
            raise ValueError("OR head needs weights (K-1, h) and biases (K-1,)")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def K(self) -> int:
        return self.biases.size + 1

    @property
    def width(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True, eq=False)
class CeHead:
    weights: np.ndarray  # (K, h)
    biases: np.ndarray

    def __post_init__(self) -> None:
        w, b = _frozen(self.weights), _frozen(self.biases)
        if w.ndim != 2 or b.shape != (w.shape[0],) or b.size < 2:
            raise ValueError("CE head needs weights (K, h) and biases (K,)")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def K(self) -> int:
        return self.biases.size

    @property
    def width(self) -> int:
        return self.weights.shape[1]


Head = Union[CoralHead, OrHead, CeHead]


def _check_width(head: Head, g: np.ndarray) -> None:
    if g.shape[-1] != head.width:
        raise ValueError(f"head expects width {head.width}, got {g.shape[-1]}")


def coral_logits(head: CoralHead, g) -> np.ndarray:
    """``z[k] = <shared_weight, g> + b[k]``; accepts one vector or a batch."""
    g = np.asarray(g, dtype=np.float64)
    _check_width(head, g)
    score = g @ head.shared_weight
    return np.asarray(score)[..., None] + head.biases


def coral_probs(head: CoralHead, g) -> np.ndarray:
    return sigmoid(coral_logits(head, g))


def or_logits(head: OrHead, g) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    _check_width(head, g)
    return g @ head.weights.T + head.biases


def ce_logits(head: CeHead, g) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    _check_width(head, g)
    return g @ head.weights.T + head.biases


def ce_predict(logits) -> np.ndarray | int:
    """Rank index of the largest logit; the first maximum wins ties."""
    logits = np.asarray(logits, dtype=np.float64)
    q = np.argmax(logits, axis=-1) + 1
    return int(q) if logits.ndim == 1 else q.astype(np.int64)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class OrdinalModel:
    body: MlpParams
    head: Head
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.head.width != self.body.width:
            raise ValueError(f"head width {self.head.width} != body output width {self.body.width}")

    @property
    def kind(self) -> str:
        if isinstance(self.head, CoralHead):
            return "coral"
        if isinstance(self.head, OrHead):
            return "or"
        return "ce"

    @property
    def K(self) -> int:
        return self.head.K

    @property
    def n_features(self) -> int:
        return self.body.n_features

    # parameter layout: body W0, b0, W1, b1, ..., then head params
    def parameter_names(self) -> list[str]:
        names = []
        for i in range(len(self.body.weights)):
            names += [f"body.W{i}", f"body.b{i}"]
        if self.kind == "coral":
            names += ["head.shared_weight", "head.biases"]
        else:
            names += ["head.weights", "head.biases"]
        return names

    def parameters(self) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for w, b in zip(self.body.weights, self.body.biases):
            out += [w, b]
        if self.kind == "coral":
            out += [self.head.shared_weight, self.head.biases]
        else:
            out += [self.head.weights, self.head.biases]
        return out

    def with_parameters(self, params: Sequence[np.ndarray]) -> "OrdinalModel":
        params = list(params)
        current = self.parameters()
        if len(params) != len(current):
            raise ValueError(f"expected {len(current)} parameter arrays, got {len(params)}")
        for name, new, old in zip(self.parameter_names(), params, current):
            if np.shape(new) != old.shape:
                raise ValueError(f"{name}: shape {np.shape(new)} != {old.shape}")
        n = len(self.body.weights)
        body = MlpParams(tuple(params[0 : 2 * n : 2]), tuple(params[1 : 2 * n : 2]))
        head = type(self.head)(params[-2], params[-1])
        return OrdinalModel(body, head, dict(self.metadata))

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def with_flat(self, theta) -> "OrdinalModel":
        theta = np.asarray(theta, dtype=np.float64)
        shapes = [p.shape for p in self.parameters()]
        sizes = [int(np.prod(s)) for s in shapes]
        if theta.shape != (sum(sizes),):
            raise ValueError(f"expected {sum(sizes)} parameters, got shape {theta.shape}")
        parts, start = [], 0
        for s, n in zip(shapes, sizes):
            parts.append(theta[start : start + n].reshape(s))
            start += n
        return self.with_parameters(parts)

    def features(self, X) -> np.ndarray:
        return forward_features(self.body, X)

    def logits(self, X) -> np.ndarray:
        g = self.features(X)
        if self.kind == "coral":
            return coral_logits(self.head, g)
        if self.kind == "or":
            return or_logits(self.head, g)
        return ce_logits(self.head, g)

    def probs(self, X) -> np.ndarray:
        """Task probabilities P(y > r_k) for binary heads, class probabilities for CE."""
        z = self.logits(X)
        return _softmax(z) if self.kind == "ce" else sigmoid(z)

    def decisions(self, X) -> np.ndarray | None:
        """Binary task outputs (N, K-1); ``None`` for the CE head, which has no tasks."""
        if self.kind == "ce":
            return None
        return threshold_probs(self.probs(np.atleast_2d(X)))

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if self.kind == "ce":
            return ce_predict(self.logits(X))
        return decode_ranks(self.decisions(X))


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_mlp(layer_sizes: Sequence[int], rng: np.random.Generator) -> MlpParams:
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or min(sizes) < 1:
        raise ValueError(f"bad layer sizes {layer_sizes}")
    ws = [_glorot(rng, a, b, (a, b)) for a, b in zip(sizes[:-1], sizes[1:])]
    bs = [np.zeros(b) for b in sizes[1:]]
    return MlpParams(tuple(ws), tuple(bs))


def init_model(
    n_features: int,
    n_ranks: int,
    head: str = "coral",
    hidden: Sequence[int] = (32, 16),
    seed: int | np.random.Generator = 0,
) -> OrdinalModel:
    """Fresh model with Glorot-uniform weights and zero biases.

    ``hidden`` lists the body widths; its last entry is the penultimate width h.
    """
    if head not in HEAD_KINDS:
        raise ValueError(f"unknown head {head!r}; choose from {HEAD_KINDS}")
    if n_ranks < 2:
        raise ValueError("need at least 2 ranks")
    if not hidden:
        raise ValueError("need at least one body layer")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    body = init_mlp([n_features, *hidden], rng)
    h = body.width
    if head == "coral":
        # single output unit: fan_out 1
        hd: Head = CoralHead(_glorot(rng, h, 1, h), np.zeros(n_ranks - 1))
    elif head == "or":
        hd = OrHead(_glorot(rng, h, 1, (n_ranks - 1, h)), np.zeros(n_ranks - 1))
    else:
        hd = CeHead(_glorot(rng, h, n_ranks, (n_ranks, h)), np.zeros(n_ranks))
    return OrdinalModel(body, hd)


def _to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def model_to_dict(model: OrdinalModel) -> dict:
    """Versioned plain-data form of ``model``.

    Layout (version 1)::

        {"format": "coral-ordinal-model", "version": 1, "head": "coral"|"or"|"ce",
         "n_features": d, "layer_sizes": [d, ..., h], "n_ranks": K,
         "parameters": [{"name": ..., "shape": [...], "values": [...]}, ...],
         "metadata": {...}}

    Parameters appear in :meth:`OrdinalModel.parameter_names` order, values in
    row-major order. Floats are written with ``repr`` precision so reading
    them back is bit-exact.
    """
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "head": model.kind,
        "n_features": model.n_features,
        "layer_sizes": list(model.body.layer_sizes),
        "n_ranks": model.K,
        "parameters": [
            {"name": n, "shape": list(p.shape), "values": p.ravel().tolist()}
            for n, p in zip(model.parameter_names(), model.parameters())
        ],
        "metadata": _to_jsonable(model.metadata),
    }


def model_from_dict(data: dict) -> OrdinalModel:
    if data.get("format") != MODEL_FORMAT:
        raise ValueError("not a coral-ordinal model file")
    if data.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {data.get('version')!r}")
    sizes = data["layer_sizes"]
    template = init_model(sizes[0], data["n_ranks"], data["head"], sizes[1:], seed=0)
    entries = data["parameters"]
    names = template.parameter_names()
    if [e["name"] for e in entries] != names:
        raise ValueError("parameter list does not match the declared architecture")
    arrays = [np.array(e["values"], dtype=np.float64).reshape(e["shape"]) for e in entries]
    model = template.with_parameters(arrays)
    return OrdinalModel(model.body, model.head, dict(data.get("metadata", {})))


def save_model(model: OrdinalModel, path: str | os.PathLike) -> None:
    """Write ``model`` as JSON; the file appears atomically or not at all."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(model_to_dict(model), indent=1) + "\n")
    os.replace(tmp, path)


def load_model(path: str | os.PathLike) -> OrdinalModel:
    return model_from_dict(json.loads(Path(path).read_text()))
