"""Command line interface.

Subcommands: train, eval, audit, gradcheck, bound, theorem1, gen-data.

Settings are resolved as: command-line flag > ``CORAL_ORDINAL_<NAME>``
environment variable > ``--config`` JSON file > configuration stored in the
model file (eval/audit/bound) > built-in defaults.

Exit codes: 0 success or check passed, 1 check failed, 2 usage, config or I/O
error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .core import inconsistency_counts
from .data import DataFormatError, generate_synthetic, write_csv
from .metrics import audit_split, bound_check, load_cost_matrix, named_cost_matrix
from .model import load_model, model_to_dict
from .optim import DegenerateTaskError, TrainingDiverged
from .pipeline import RunConfig, apply_model_transform, load_dataset, prepare_splits, run_training
from .verify import GRADCHECK_TOL, ORDER_TOL, biases_ordered, gradcheck, ordered_bias_trials

ENV_PREFIX = "CORAL_ORDINAL_"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# RunConfig field -> parser for string values (flags and environment)
_CONVERTERS = {
    "dataset": str,
    "header": _bool,
    "ranks": int,
    "n": int,
    "d": int,
    "noise_sd": float,
    "data_seed": int,
    "split": _floats,
    "split_seed": int,
    "normalize": _bool,
    "head": str,
    "epochs": int,
    "batch_size": int,
    "lr": float,
    "seed": int,
    "lam": str,  # resolved by _resolve_lambda
    "hidden": _ints,
    "normalize_loss": _bool,
    "costs": lambda s: tuple(c for c in s.replace(",", " ").split()),
}


def _resolve_lambda(value, K: int):
    if value is None or isinstance(value, (list, tuple)):
        return value
    if value == "uniform":
        return None
    try:
        lam = _floats(Path(value).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read task weights: {exc}") from None
    if len(lam) != K - 1:
        raise UsageError(f"{value}: expected {K - 1} task weights, got {len(lam)}")
    return lam


def _env_overrides() -> dict:
    out = {}
    for name, conv in _CONVERTERS.items():
        raw = os.environ.get(ENV_PREFIX + name.upper())
        if raw is None:
            continue
        try:
            out[name] = conv(raw)
        except ValueError as exc:
            raise UsageError(f"{ENV_PREFIX}{name.upper()}: {exc}") from None
    return out


def _flag_overrides(args: argparse.Namespace) -> dict:
    out = {}
    for name in _CONVERTERS:
        v = getattr(args, name, None)
        if v is not None:
            out[name] = v
    if getattr(args, "synthetic", False):
        out["dataset"] = None
    return out


def _effective_config(args: argparse.Namespace, base: dict | None = None) -> RunConfig:
    merged = dict(base or {})
    if getattr(args, "config", None):
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        merged.update(file_cfg)
    merged.update(_env_overrides())
    merged.update(_flag_overrides(args))
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    merged["lam"] = _resolve_lambda(merged.get("lam"), int(merged.get("ranks", RunConfig.ranks)))
    try:
        return RunConfig.from_dict(merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def _dumps(obj) -> str:
    return json.dumps(obj, allow_nan=False)


def _write_atomically(files: dict[Path, str]) -> None:
    """Write every file to a temporary name first and rename only when all succeeded."""
    tmps = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_text(text)
            tmps.append((tmp, path))
    except OSError:
        for tmp, _ in tmps:
            tmp.unlink(missing_ok=True)
        raise
    for tmp, path in tmps:
        os.replace(tmp, path)


def _emit(record: dict, out: str | None) -> None:
    text = _dumps(record) + "\n"
    if out:
        _write_atomically({Path(out): text})
    sys.stdout.write(text)


# -- commands ---------------------------------------------------------------


def cmd_train(args) -> int:
    cfg = _effective_config(args)
    if not args.out:
        raise UsageError("train needs --out DIR")
    outcome = run_training(cfg)
    conf = cfg.to_dict()
    log_lines = [_dumps({"config": conf})]
    log_lines += [_dumps(rec.to_record()) for rec in outcome.result.log]
    report = {"config": conf, "split": "test", "best_epoch": outcome.result.best_epoch}
    report.update(outcome.report.to_record())
    out = Path(args.out)
    _write_atomically(
        {
            out / "log.jsonl": "\n".join(log_lines) + "\n",
            out / "model.json": json.dumps(model_to_dict(outcome.model), indent=1) + "\n",
            out / "report.json": _dumps(report) + "\n",
        }
    )
    sys.stdout.write(_dumps(report) + "\n")
    return EXIT_OK


def _model_and_split(args):
    try:
        model = load_model(args.model)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load model {args.model}: {exc}") from None
    cfg = _effective_config(args, base=model.metadata.get("config"))
    if args.part == "all":
        ds = apply_model_transform(model, load_dataset(cfg))
    else:
        # same split as training; transform from the model, not refitted
        parts, _ = prepare_splits(RunConfig.from_dict({**cfg.to_dict(), "normalize": False}))
        ds = apply_model_transform(model, dict(zip(("train", "val", "test"), parts))[args.part])
    if ds.K != model.K or ds.d != model.n_features:
        raise UsageError(f"dataset (d={ds.d}, K={ds.K}) does not fit model (d={model.n_features}, K={model.K})")
    return model, ds, cfg


def _cost_matrices(specs, K: int) -> dict:
    out = {}
    for spec in specs:
        try:
            C = named_cost_matrix(spec, K) if spec in ("classification", "absolute") else load_cost_matrix(spec)
        except OSError as exc:
            raise UsageError(f"cannot read cost matrix {spec}: {exc}") from None
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if C.shape[0] != K:
            raise UsageError(f"cost matrix {spec} is {C.shape[0]}x{C.shape[0]}, model has K={K}")
        out[spec] = C
    return out


def cmd_eval(args) -> int:
    model, ds, _ = _model_and_split(args)
    rep = audit_split(model, ds)
    _emit({"split": args.part, "head": model.kind, "n": rep.n, "mae": rep.mae, "rmse": rep.rmse}, args.out)
    return EXIT_OK


def cmd_audit(args) -> int:
    model, ds, cfg = _model_and_split(args)
    rep = audit_split(model, ds, _cost_matrices(cfg.costs, model.K))
    _emit({"split": args.part, "head": model.kind, **rep.to_record()}, args.out)
    return EXIT_OK


def cmd_bound(args) -> int:
    model, ds, cfg = _model_and_split(args)
    F = model.decisions(ds.features)
    if F is None:
        raise UsageError("the bound needs binary task outputs; the CE head has none")
    results, ok = {}, True
    monotone = bool(np.all(inconsistency_counts(F) == 0))
    for name, C in _cost_matrices(cfg.costs, model.K).items():
        lhs, rhs = bound_check(F, ds.labels, C)
        holds = lhs <= rhs + 1e-12
        ok &= holds
        results[name] = {"lhs": lhs, "rhs": rhs, "holds": holds}
    _emit({"split": args.part, "head": model.kind, "rank_monotone": monotone, "bounds": results, "pass": ok}, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_gradcheck(args) -> int:
    err = gradcheck(args.seed, args.head)
    ok = err <= GRADCHECK_TOL
    _emit({"head": args.head, "seed": args.seed, "max_rel_error": err, "tolerance": GRADCHECK_TOL, "pass": ok}, None)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_theorem1(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    try:
        bs = ordered_bias_trials(args.trials, args.seed)
    except DegenerateTaskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    ordered = sum(biases_ordered(b) for b in bs)
    worst = min(float(np.min(b[:-1] - b[1:])) for b in bs)
    ok = ordered == args.trials
    _emit({"trials": args.trials, "seed": args.seed, "ordered": ordered, "min_gap": worst,
           "tolerance": ORDER_TOL, "pass": ok}, None)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_gen_data(args) -> int:
    if not args.out:
        raise UsageError("gen-data needs --out FILE")
    cfg = _effective_config(args)
    ds = generate_synthetic(cfg.data_seed, cfg.n, cfg.d, cfg.ranks, cfg.noise_sd)
    write_csv(ds, Path(args.out))
    _emit({"out": args.out, "n": ds.N, "d": ds.d, "ranks": ds.K, "provenance": ds.provenance}, None)
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _add_data_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("data")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--dataset", type=str, help="CSV file: feature columns then an integer rank column")
    src.add_argument("--synthetic", action="store_true", help="use the synthetic latent-threshold generator")
    g.add_argument("--header", type=_bool, metavar="BOOL", help="CSV has a header line")
    g.add_argument("--ranks", type=int, metavar="K", help="number of ranks")
    g.add_argument("--n", type=int, help="synthetic: number of examples")
    g.add_argument("--d", type=int, help="synthetic: number of features")
    g.add_argument("--noise-sd", dest="noise_sd", type=float, help="synthetic: latent noise")
    g.add_argument("--data-seed", dest="data_seed", type=int, help="synthetic: generator seed")
    g.add_argument("--split", type=_floats, metavar="TR,VA,TE", help="split fractions, e.g. 0.7,0.1,0.2")
    g.add_argument("--split-seed", dest="split_seed", type=int)
    g.add_argument("--normalize", type=_bool, metavar="BOOL", help="standardise features on train")
    g.add_argument("--cost", dest="costs", type=_CONVERTERS["costs"], metavar="LIST",
                   help="cost matrices: classification, absolute, or paths (comma separated)")
    p.add_argument("--config", type=str, help="JSON file with configuration keys")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coral-ordinal", description="Rank-consistent ordinal regression tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one head and evaluate it on the test split")
    _add_data_options(p)
    g = p.add_argument_group("training")
    g.add_argument("--head", choices=("coral", "or", "ce"))
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch-size", dest="batch_size", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--lambda", dest="lam", type=str, metavar="uniform|PATH", help="task importance weights")
    g.add_argument("--hidden", type=_ints, metavar="H1,H2", help="body widths; the last is the penultimate width")
    g.add_argument("--normalize-loss", dest="normalize_loss", type=_bool, metavar="BOOL",
                   help="divide the summed batch loss by the batch size")
    p.add_argument("--out", type=str, help="output directory")
    p.set_defaults(func=cmd_train)

    for name, func, text in (
        ("eval", cmd_eval, "MAE/RMSE of a saved model"),
        ("audit", cmd_audit, "inconsistency counts (all/correct/incorrect) and bounds"),
        ("bound", cmd_bound, "cost bound lhs/rhs; fails when lhs > rhs"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--model", required=True)
        p.add_argument("--part", choices=("train", "val", "test", "all"), default="test")
        p.add_argument("--out", type=str, help="also write the record to this file")
        _add_data_options(p)
        p.set_defaults(func=func)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients on a random case")
    p.add_argument("--head", choices=("coral", "or", "ce"), default="coral")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("theorem1", help="ordered biases at the bias-only optimum on random instances")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_theorem1)

    p = sub.add_parser("gen-data", help="write a synthetic dataset as CSV")
    p.add_argument("--seed", dest="data_seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--ranks", type=int)
    p.add_argument("--noise-sd", dest="noise_sd", type=float)
    p.add_argument("--config", type=str)
    p.add_argument("--out", type=str, required=True)
    p.set_defaults(func=cmd_gen_data)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
