"""Command-line entry point: train, sweep, evaluate, inspect,
counterfactual, and export subcommands.

Run configuration is a flat ``key = value`` text file; every field is
written back explicitly on save so a run is fully self-describing.
Checkpoints are versioned JSON with base64-encoded little-endian float64
arrays: human-inspectable metadata, exact float round-trip, no binary
format dependency. ``NV_SEED`` in the environment overrides the config
seed. Exit codes: 0 success, 1 runtime/numerical failure, 2 usage or
config error.
"""

from __future__ import annotations

import argparse
import base64
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from .linalg import DTYPE
from .cells import CellKind, CellParams, InitKind, InitScheme
from .network import EncoderConfig, HeadKind, HeadParams, Model
from .train import (
    EvalReport,
    TrainConfig,
    TrainingDiverged,
    evaluate,
    fit,
    save_history_csv,
)
from .data import DataSet, load_ucr, pad_dataset
from . import interpret

CHECKPOINT_VERSION = 1


class UsageError(Exception):
    """Bad flags, bad config, or unusable paths; maps to exit code 2."""


@dataclass
class RunConfig:
    """Everything one training run needs, in declaration order."""

    train_path: str = ""
    test_path: str = ""
    cell: str = "gru"
    head: str = "nv"
    hidden_dim: int = 32
    layers: int = 1
    bidirectional: bool = False
    max_len: int = 0  # 0 = use the training split's length
    mean_pool: bool = False
    znorm: bool = False
    init: str = "uniform"
    learning_rate: float = 0.001
    epochs: int = 1000
    batch_size: int = 0  # 0 = full batch
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    grad_clip: float = 0.0  # 0 = off
    output_dir: str = "runs/latest"

    def save(self, path) -> None:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                text = "true" if v else "false"
            elif isinstance(v, float):
                text = repr(v)
            else:
                text = str(v)
            lines.append(f"{f.name} = {text}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "RunConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        for line_no, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{line_no}: expected 'key = value'")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in fields:
                raise UsageError(f"{path}:{line_no}: unknown config key {key!r}")
            ftype = fields[key].type
            try:
                if ftype == "bool":
                    if raw not in ("true", "false"):
                        raise ValueError(raw)
                    values[key] = raw == "true"
                elif ftype == "int":
                    values[key] = int(raw)
                elif ftype == "float":
                    values[key] = float(raw)
                else:
                    values[key] = raw
            except ValueError:
                raise UsageError(
                    f"{path}:{line_no}: bad value {raw!r} for field {key!r}"
                ) from None
        return cls(**values)

    def encoder(self, input_dim: int, horizon: int) -> EncoderConfig:
        return EncoderConfig(
            cell=_parse_enum(CellKind, self.cell, "cell"),
            input_dim=input_dim,
            hidden_dim=self.hidden_dim,
            max_len=self.max_len or horizon,
            layers=self.layers,
            bidirectional=self.bidirectional,
        )

    def head_kind(self) -> HeadKind:
        return _parse_enum(HeadKind, self.head, "head")

    def init_scheme(self) -> InitScheme:
        return InitScheme(_parse_enum(InitKind, self.init, "init"), self.seed)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size or None,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            seed=self.seed,
            grad_clip=self.grad_clip or None,
        )


def _parse_enum(enum_cls, value: str, what: str):
    for member in enum_cls:
        if member.value == value:
            return member
    valid = ", ".join(m.value for m in enum_cls)
    raise UsageError(f"invalid {what} {value!r}; expected one of: {valid}")


def _encode_array(arr: np.ndarray) -> dict:
    arr = np.asarray(arr, dtype=DTYPE)
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.astype("<f8").tobytes()).decode("ascii"),
    }


def _decode_array(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype="<f8").astype(DTYPE).reshape(obj["shape"])


def save_checkpoint(path, model: Model, run_config: RunConfig,
                    metrics: Optional[dict] = None,
                    adam: Optional[dict] = None) -> None:
    """Write a versioned JSON checkpoint; identical state gives identical
    bytes, so save -> load -> save is a fixed point."""
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "run_config": dataclasses.asdict(run_config),
        "encoder": {
            "cell": model.encoder.cell.value,
            "input_dim": model.encoder.input_dim,
            "hidden_dim": model.encoder.hidden_dim,
            "max_len": model.encoder.max_len,
            "layers": model.encoder.layers,
            "bidirectional": model.encoder.bidirectional,
        },
        "head": {
            "kind": model.head.kind.value,
            "mean_pool": model.head.mean_pool,
            "V": _encode_array(model.head.V),
        },
        "cells": [
            {name: _encode_array(arr) for name, arr in p.arrays.items()}
            for p in model.cells
        ],
        "adam": adam,
        "metrics": metrics,
        "seed": run_config.seed,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_checkpoint(path):
    """Read a checkpoint; returns ``(model, run_config, metrics, adam)``."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"checkpoint not found: {path}")
    doc = json.loads(path.read_text())
    version = doc.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise UsageError(
            f"checkpoint format version {version!r} not supported "
            f"(expected {CHECKPOINT_VERSION})"
        )
    enc = doc["encoder"]
    cfg = EncoderConfig(
        cell=_parse_enum(CellKind, enc["cell"], "cell"),
        input_dim=enc["input_dim"],
        hidden_dim=enc["hidden_dim"],
        max_len=enc["max_len"],
        layers=enc["layers"],
        bidirectional=enc["bidirectional"],
    )
    cells = []
    for i, blob in enumerate(doc["cells"]):
        layer = i // cfg.directions
        in_dim = cfg.input_dim if layer == 0 else cfg.step_width
        cells.append(CellParams(
            cfg.cell, in_dim, cfg.hidden_dim,
            {name: _decode_array(t) for name, t in blob.items()},
        ))
    head = HeadParams(
        _parse_enum(HeadKind, doc["head"]["kind"], "head"),
        _decode_array(doc["head"]["V"]),
        doc["head"]["mean_pool"],
    )
    model = Model(cfg, cells, head)
    run_config = RunConfig(**doc["run_config"])
    return model, run_config, doc.get("metrics"), doc.get("adam")


def resolve_dataset(name_or_dir: str, data_root: str) -> tuple:
    """Find the train/test split files for a dataset name or directory.

    Accepts a directory containing ``*_TRAIN*``/``*_TEST*`` files, or a
    dataset name resolved (case-insensitively) under ``data_root`` and
    ``data_root/UCRArchive_2018``.
    """
    candidates = []
    p = Path(name_or_dir)
    if p.is_dir():
        candidates.append(p)
    else:
        for root in (Path(data_root), Path(data_root) / "UCRArchive_2018"):
            if root.is_dir():
                for child in sorted(root.iterdir()):
                    if child.is_dir() and child.name.lower() == name_or_dir.lower():
                        candidates.append(child)
    for d in candidates:
        train = sorted(d.glob("*_TRAIN*"))
        test = sorted(d.glob("*_TEST*"))
        if train:
            return str(train[0]), str(test[0]) if test else ""
    raise UsageError(
        f"could not resolve dataset {name_or_dir!r}: no directory with "
        f"*_TRAIN* files under {data_root!r} (or the given path)"
    )


def _load_split(path: str, run_config: RunConfig, horizon: int = 0) -> DataSet:
    if not path:
        raise UsageError("no dataset path given")
    if not Path(path).is_file():
        raise UsageError(f"dataset file not found: {path}")
    ds = load_ucr(path, znorm=run_config.znorm)
    if horizon and ds.horizon != horizon:
        ds = pad_dataset(ds, horizon)
    return ds


def _apply_env_seed(rc: RunConfig) -> RunConfig:
    env = os.environ.get("NV_SEED")
    if env is None:
        return rc
    try:
        seed = int(env)
    except ValueError:
        raise UsageError(f"NV_SEED must be an integer, got {env!r}") from None
    return dataclasses.replace(rc, seed=seed)


def _config_from_args(args) -> RunConfig:
    rc = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {}
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            overrides[f.name] = v
    if args.dataset:
        train, test = resolve_dataset(args.dataset, args.data_root)
        overrides["train_path"] = train
        overrides["test_path"] = test
    rc = dataclasses.replace(rc, **overrides)
    return _apply_env_seed(rc)


def _train_once(rc: RunConfig):
    train_ds = _load_split(rc.train_path, rc)
    horizon = rc.max_len or train_ds.horizon
    if train_ds.horizon != horizon:
        train_ds = pad_dataset(train_ds, horizon)
    encoder = rc.encoder(train_ds.feature_dim, horizon)
    model, history = fit(
        train_ds, rc.train_config(), encoder, rc.head_kind(),
        rc.init_scheme(), rc.mean_pool,
    )
    train_report = evaluate(model, train_ds)
    test_report = None
    if rc.test_path:
        test_ds = _load_split(rc.test_path, rc, horizon)
        if test_ds.num_classes != train_ds.num_classes:
            raise ValueError(
                f"test split has {test_ds.num_classes} classes, "
                f"train has {train_ds.num_classes}"
            )
        test_report = evaluate(model, test_ds)
    return model, history, train_report, test_report


def _write_run_outputs(rc: RunConfig, model, history, train_report, test_report):
    out = Path(rc.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rc.save(out / "run_config.txt")
    save_history_csv(history, out / "history.csv")
    metrics = {"train_accuracy": train_report.overall_accuracy}
    if test_report is not None:
        metrics["test_accuracy"] = test_report.overall_accuracy
    ckpt = out / "checkpoint.json"
    save_checkpoint(ckpt, model, rc, metrics=metrics)
    return ckpt, metrics


def cmd_train(args) -> int:
    rc = _config_from_args(args)
    if not rc.train_path:
        raise UsageError("a training dataset is required (--dataset or --train-path)")
    model, history, train_report, test_report = _train_once(rc)
    ckpt, metrics = _write_run_outputs(rc, model, history, train_report, test_report)
    print(f"checkpoint: {ckpt}")
    print(f"train accuracy: {metrics['train_accuracy']:.4f}")
    if "test_accuracy" in metrics:
        print(f"test accuracy: {metrics['test_accuracy']:.4f}")
    return 0


def cmd_sweep(args) -> int:
    rc = _config_from_args(args)
    if not rc.train_path:
        raise UsageError("a training dataset is required (--dataset or --train-path)")
    sizes = args.sizes
    if len(sizes) != len(set(sizes)):
        raise UsageError(f"duplicate hidden sizes in sweep: {sizes}")
    if not rc.test_path:
        raise UsageError("sweep selection needs a test split")
    rows = []
    best = None
    out = Path(rc.output_dir)
    for size in sizes:
        sub = dataclasses.replace(
            rc, hidden_dim=size, output_dir=str(out / f"hidden{size}")
        )
        model, history, train_report, test_report = _train_once(sub)
        ckpt, metrics = _write_run_outputs(sub, model, history, train_report, test_report)
        acc = metrics["test_accuracy"]
        rows.append((size, acc))
        if best is None or acc > best[1] or (acc == best[1] and size < best[0]):
            best = (size, acc, ckpt)
    out.mkdir(parents=True, exist_ok=True)
    table = ["size\ttest_accuracy"] + [f"{s}\t{a:.6f}" for s, a in rows]
    (out / "sweep.tsv").write_text("\n".join(table) + "\n")
    print("\n".join(table))
    best_path = out / "best_checkpoint.json"
    best_path.write_bytes(Path(best[2]).read_bytes())
    print(f"best: hidden={best[0]} test_accuracy={best[1]:.4f} -> {best_path}")
    return 0


def _print_report(report: EvalReport) -> None:
    print(f"overall accuracy: {report.overall_accuracy:.4f}")
    for i, acc in enumerate(report.per_class_accuracy):
        text = "n/a" if np.isnan(acc) else f"{acc:.4f}"
        print(f"class {i} accuracy: {text}")


def cmd_evaluate(args) -> int:
    model, rc, _, _ = load_checkpoint(args.checkpoint)
    ds = _load_split(args.dataset_path, rc, model.encoder.max_len)
    report = evaluate(model, ds)
    _print_report(report)
    return 0


def _require_nv_checkpoint(model: Model):
    if model.head.kind is not HeadKind.NEUROVIEW:
        raise UsageError(
            f"this checkpoint uses the {model.head.kind.value!r} head; "
            "weight inspection and counterfactuals need the per-timestep "
            "'nv' head, whose classifier has one weight block per timestep"
        )


def _parse_classes(spec: str, num_classes: int) -> List[int]:
    if spec == "all":
        return list(range(num_classes))
    try:
        classes = [int(c) for c in spec.split(",") if c.strip() != ""]
    except ValueError:
        raise UsageError(f"bad class list {spec!r}") from None
    for c in classes:
        if not 0 <= c < num_classes:
            raise UsageError(f"class {c} outside [0, {num_classes})")
    return classes


def cmd_inspect(args) -> int:
    model, rc, _, _ = load_checkpoint(args.checkpoint)
    _require_nv_checkpoint(model)
    classes = _parse_classes(args.classes, model.num_classes)
    cfg = model.encoder
    maps = [interpret.weight_map(model.head, cfg, c) for c in classes]
    sim = interpret.class_similarity(model.head) if model.num_classes >= 2 else None
    files = interpret.export_report(maps, sim, [], cfg, args.out)
    for m in maps:
        means = m.timestep_means()
        top = np.argsort(-means, kind="stable")[:5]
        steps = ", ".join(str(int(t)) for t in top)
        print(f"class {m.class_index}: top-5 timesteps by mean weight: {steps}")
    print(f"wrote {len(files)} files to {args.out}")
    return 0


def cmd_counterfactual(args) -> int:
    model, rc, _, _ = load_checkpoint(args.checkpoint)
    _require_nv_checkpoint(model)
    ds = _load_split(args.dataset_path, rc, model.encoder.max_len)
    mode = _parse_enum(interpret.AblationMode, args.mode, "mode")
    target = _parse_enum(interpret.AblationTarget, args.target, "target")
    ks = args.k_list
    for k in ks:
        if k < 0 or k > model.encoder.max_len:
            raise UsageError(
                f"k={k} outside [0, {model.encoder.max_len}] for this model"
            )
    results = [
        interpret.time_analysis(model, ds, args.class_index, k, mode, target)
        for k in ks
    ]
    rows = interpret.counterfactual_rows(results)
    text = json.dumps(rows, indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def cmd_export(args) -> int:
    model, rc, _, _ = load_checkpoint(args.checkpoint)
    _require_nv_checkpoint(model)
    cfg = model.encoder
    classes = _parse_classes(args.classes, model.num_classes)
    maps = [interpret.weight_map(model.head, cfg, c) for c in classes]
    sim = interpret.class_similarity(model.head) if model.num_classes >= 2 else None
    results = []
    if args.dataset_path and args.k_list:
        ds = _load_split(args.dataset_path, rc, cfg.max_len)
        mode = _parse_enum(interpret.AblationMode, args.mode, "mode")
        for c in classes:
            for k in args.k_list:
                if k < 0 or k > cfg.max_len:
                    raise UsageError(f"k={k} outside [0, {cfg.max_len}]")
                results.append(interpret.time_analysis(model, ds, c, k, mode))
    files = interpret.export_report(maps, sim, results, cfg, args.out)
    print(f"wrote {len(files)} files to {args.out}")
    return 0


def _add_config_flags(sp) -> None:
    sp.add_argument("--config", help="run-config file to start from")
    sp.add_argument("--dataset", help="dataset name or directory with *_TRAIN*/*_TEST* files")
    sp.add_argument("--data-root", default="data", help="root for dataset-name lookup")
    sp.add_argument("--train-path", dest="train_path", help="explicit training split file")
    sp.add_argument("--test-path", dest="test_path", help="explicit test split file")
    sp.add_argument("--cell", choices=[c.value for c in CellKind])
    sp.add_argument("--head", choices=[h.value for h in HeadKind])
    sp.add_argument("--hidden", dest="hidden_dim", type=int)
    sp.add_argument("--layers", type=int)
    sp.add_argument("--bidirectional", action="store_const", const=True, default=None)
    sp.add_argument("--max-len", dest="max_len", type=int)
    sp.add_argument("--mean-pool", dest="mean_pool", action="store_const",
                    const=True, default=None)
    sp.add_argument("--znorm", action="store_const", const=True, default=None)
    sp.add_argument("--init", choices=[i.value for i in InitKind])
    sp.add_argument("--lr", dest="learning_rate", type=float)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--batch-size", dest="batch_size", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--grad-clip", dest="grad_clip", type=float)
    sp.add_argument("--out", dest="output_dir", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neuroview",
        description="Train, evaluate, and inspect recurrent sequence "
                    "classifiers with a per-timestep linear readout.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("train", help="train one model and write a checkpoint")
    _add_config_flags(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("sweep", help="train across hidden sizes, keep the best")
    _add_config_flags(sp)
    sp.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128],
                    help="hidden sizes to sweep")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("evaluate", help="evaluate a checkpoint on a split")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--dataset-path", dest="dataset_path", required=True,
                    help="split file to evaluate")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("inspect", help="export weight maps and class similarity")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--classes", default="all", help="'all' or comma list of class ids")
    sp.add_argument("--out", default="analysis", help="output directory")
    sp.set_defaults(func=cmd_inspect)

    sp = sub.add_parser("counterfactual",
                        help="zero a class's top-K timesteps and re-evaluate")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--dataset-path", dest="dataset_path", required=True)
    sp.add_argument("--class", dest="class_index", type=int, required=True)
    sp.add_argument("--k-list", dest="k_list", type=int, nargs="+", required=True)
    sp.add_argument("--mode", default="top-positive",
                    choices=[m.value for m in interpret.AblationMode])
    sp.add_argument("--target", default="inputs",
                    choices=[t.value for t in interpret.AblationTarget])
    sp.add_argument("--out", help="write the JSON table here instead of stdout")
    sp.set_defaults(func=cmd_counterfactual)

    sp = sub.add_parser("export",
                        help="export the full analysis bundle for a checkpoint")
    sp.add_argument("--checkpoint", required=True)
    sp.add_argument("--classes", default="all")
    sp.add_argument("--dataset-path", dest="dataset_path",
                    help="needed for counterfactual rows")
    sp.add_argument("--k-list", dest="k_list", type=int, nargs="*", default=[])
    sp.add_argument("--mode", default="top-positive",
                    choices=[m.value for m in interpret.AblationMode])
    sp.add_argument("--out", default="analysis", help="output directory")
    sp.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TrainingDiverged as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
