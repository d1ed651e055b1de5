"""Command-line pipeline driver.

Each stage is a subcommand with file-based handoffs: ``validate`` checks a
dataset, ``embed`` materializes four vector files (synthetic/human x
English/Hindi context), ``fuse`` joins them into a labeled feature matrix,
``train`` fits a classifier, ``predict`` and ``evaluate`` consume the
checkpoint, and ``run-all`` chains everything from one JSON config.

Conventions:

* machine-readable JSON goes to stdout, logs go to stderr
  (``CMXQE_LOG`` picks the level, default WARNING)
* exit codes: 0 success, 1 validation findings, 2 I/O or input error,
  3 numerical failure (non-finite loss, degenerate metric)
* floats in stdout reports are rounded to 6 decimals
* given identical inputs and seeds every subcommand writes byte-identical
  artifacts, and run-all equals the composition of the individual stages
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .dataset import (
    LabeledRecord,
    ParseResult,
    ValidationReport,
    label_records,
    parse_hinge,
    split_dataset,
    validate_dataset,
)
from .embeddings import (
    DIM,
    DeterministicProvider,
    EmbeddingStore,
    FileProvider,
    provide_embeddings,
    build_requests,
    read_clsv,
    write_clsv,
)
from .errors import (
    DegenerateDistributionError,
    EmptyDatasetError,
    LengthMismatchError,
    MissingKeyError,
    NonFiniteLossError,
    PipelineError,
    UnreadableFileError,
)
from .fusion import FeatureMatrix, build_feature_matrix, save_feature_matrix, load_feature_matrix
from .metrics import MetricReport, evaluate
from .nn import TrainConfig, load_checkpoint, predict, save_checkpoint, train
from .tasks import Task

LOGGER = logging.getLogger("cmxqe.cli")

# Fixed artifact names inside an embeddings directory.
EMBED_FILES = {
    ("syn", "en"): "syn_en.clsv",
    ("syn", "hi"): "syn_hi.clsv",
    ("hum", "en"): "hum_en.clsv",
    ("hum", "hi"): "hum_hi.clsv",
}

SPLIT_CHOICES = ("all", "train", "validation", "test")

_RUN_ALL_DEFAULTS: dict = {
    "dataset": None,
    "format": None,
    "out_dir": None,
    "provider": "deterministic:42",
    "seed": 42,
    "train_fraction": 0.8,
    "validation_fraction": 0.0,
    "test_fraction": 0.2,
    "epochs_rating": None,  # None -> task default (3)
    "epochs_disagreement": None,  # None -> task default (10)
    "learning_rate": 5e-6,
    "batch_size": 32,
}


def _configure_logging() -> None:
    name = os.environ.get("CMXQE_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s"
    )


def _print_json(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


def _round6(value: float) -> float:
    return round(float(value), 6)


@dataclass(frozen=True)
class ProviderSpec:
    """Parsed form of ``deterministic:<seed>`` or ``files:<dir>``."""

    kind: str
    seed: int = 0
    directory: str = ""

    @classmethod
    def parse(cls, text: str) -> "ProviderSpec":
        kind, sep, rest = text.partition(":")
        if kind == "deterministic":
            if not sep or not rest:
                raise ValueError("deterministic provider needs a seed: deterministic:<seed>")
            try:
                return cls(kind="deterministic", seed=int(rest))
            except ValueError:
                raise ValueError(f"deterministic seed must be an integer, got {rest!r}") from None
        if kind == "files":
            if not sep or not rest:
                raise ValueError("file provider needs a directory: files:<dir>")
            return cls(kind="files", directory=rest)
        raise ValueError(f"unknown provider {text!r} (expected deterministic:<seed> or files:<dir>)")

    def for_group(self, source: str, context: str):
        if self.kind == "deterministic":
            return DeterministicProvider(self.seed)
        return FileProvider(Path(self.directory) / EMBED_FILES[(source, context)])


# ---------------------------------------------------------------------------
# stage helpers shared by the subcommands and run-all


def _full_validation(result: ParseResult) -> ValidationReport:
    """Dataset invariants plus parse-time row rejections as violations."""
    report = validate_dataset(result.pairs, result.synthetic)
    for row in result.malformed:
        report.violations.append(
            {"kind": "malformed_row", "line": row.line, "reason": row.reason}
        )
    return report


def _embed_dataset(result: ParseResult, spec: ProviderSpec, out_dir: Path) -> dict[str, int]:
    """Write the four vector files; returns per-file key counts."""
    out_dir.mkdir(parents=True, exist_ok=True)
    groups = build_requests(result.pairs, result.synthetic)
    counts: dict[str, int] = {}
    for (source, context), requests in groups.items():
        name = EMBED_FILES[(source, context)]
        provider = spec.for_group(source, context)
        store = provide_embeddings(provider, requests)
        write_clsv(store, out_dir / name)
        counts[name] = len(store)
        LOGGER.info("wrote %s (%d keys)", out_dir / name, len(store))
    return counts


def _load_embedding_dir(path: Path) -> tuple[EmbeddingStore, EmbeddingStore]:
    syn = EmbeddingStore.merge(
        read_clsv(path / EMBED_FILES[("syn", "en")], expected_dim=DIM),
        read_clsv(path / EMBED_FILES[("syn", "hi")], expected_dim=DIM),
    )
    hum = EmbeddingStore.merge(
        read_clsv(path / EMBED_FILES[("hum", "en")], expected_dim=DIM),
        read_clsv(path / EMBED_FILES[("hum", "hi")], expected_dim=DIM),
    )
    return syn, hum


def _matrix_for_split(
    labeled: Sequence[LabeledRecord],
    task: Task,
    split_name: str,
    seed: int,
    fractions: tuple[float, float, float],
    syn_store: EmbeddingStore,
    hum_store: EmbeddingStore,
) -> FeatureMatrix:
    if not labeled:
        raise EmptyDatasetError("dataset has no synthetic records to fuse")
    records: Sequence[LabeledRecord] = labeled
    if split_name != "all":
        split = split_dataset(labeled, seed=seed, fractions=fractions, task=task)
        records = getattr(split, split_name)
        if not records:
            raise EmptyDatasetError(f"split {split_name!r} came out empty")
    return build_feature_matrix(records, syn_store, hum_store, task)


def _write_trace_csv(trace: Sequence[float], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["epoch", "mean_loss"])
        for epoch, loss in enumerate(trace, start=1):
            writer.writerow([epoch, repr(float(loss))])


def _load_gold(path: Path, matrix: FeatureMatrix) -> list[int]:
    """Gold labels from JSON: a mapping record_id -> label, or an aligned list."""
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise UnreadableFileError(f"cannot read gold labels: {exc}") from exc
    if isinstance(data, dict):
        missing = [rid for rid in matrix.record_ids if rid not in data]
        if missing:
            raise MissingKeyError(missing)
        return [int(data[rid]) for rid in matrix.record_ids]
    if isinstance(data, list):
        if len(data) != len(matrix):
            raise LengthMismatchError(
                f"gold list has {len(data)} labels, matrix has {len(matrix)} rows"
            )
        return [int(v) for v in data]
    raise UnreadableFileError("gold labels must be a JSON object or array")


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args: argparse.Namespace) -> int:
    result = parse_hinge(args.dataset, fmt=args.format)
    report = _full_validation(result)
    _print_json(report.to_dict())
    return 0 if report.ok else 1


def cmd_embed(args: argparse.Namespace) -> int:
    result = parse_hinge(args.dataset, fmt=args.format)
    spec = ProviderSpec.parse(args.provider)
    counts = _embed_dataset(result, spec, Path(args.out_dir))
    _print_json({"out_dir": str(args.out_dir), "files": counts})
    return 0


def cmd_fuse(args: argparse.Namespace) -> int:
    result = parse_hinge(args.dataset, fmt=args.format)
    labeled = label_records(result.synthetic)
    task = Task.from_string(args.task)
    syn_store, hum_store = _load_embedding_dir(Path(args.embeddings_dir))
    fractions = (args.train_fraction, args.validation_fraction, args.test_fraction)
    matrix = _matrix_for_split(
        labeled, task, args.split, args.seed, fractions, syn_store, hum_store
    )
    save_feature_matrix(matrix, args.out)
    _print_json(
        {
            "out": str(args.out),
            "task": task.value,
            "split": args.split,
            "rows": len(matrix),
            "dim": int(matrix.features.shape[1]),
        }
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    matrix = load_feature_matrix(args.matrix)
    task = Task.from_string(args.task) if args.task else matrix.task
    config = TrainConfig(
        task=task,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        learning_rate=args.lr,
    )
    model, trace = train(config, matrix)
    out = Path(args.out)
    save_checkpoint(model, config, trace, out)
    trace_csv = Path(str(out) + ".trace.csv")
    _write_trace_csv(trace, trace_csv)
    _print_json(
        {
            "checkpoint": str(out),
            "trace_csv": str(trace_csv),
            "task": task.value,
            "epochs": len(trace),
            "final_loss": _round6(trace[-1]) if trace else None,
        }
    )
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    matrix = load_feature_matrix(args.matrix)
    if matrix.task is not checkpoint.config.task:
        raise ValueError(
            f"matrix is labeled for {matrix.task.value!r}, "
            f"checkpoint was trained for {checkpoint.config.task.value!r}"
        )
    labels = predict(checkpoint.model, matrix)
    payload = {
        "task": matrix.task.value,
        "n": len(labels),
        "predictions": {rid: label for rid, label in zip(matrix.record_ids, labels)},
    }
    if args.out:
        Path(args.out).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    _print_json(payload)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    matrix = load_feature_matrix(args.matrix)
    if matrix.task is not checkpoint.config.task:
        raise ValueError(
            f"matrix is labeled for {matrix.task.value!r}, "
            f"checkpoint was trained for {checkpoint.config.task.value!r}"
        )
    predictions = predict(checkpoint.model, matrix)
    if args.gold:
        gold = _load_gold(Path(args.gold), matrix)
    else:
        gold = [int(v) for v in matrix.natural_labels]
    report = evaluate(gold, predictions, matrix.task)
    if args.out:
        Path(args.out).write_text(report.to_json(precision=6) + "\n", encoding="utf-8")
    _print_json(report.to_dict(precision=6))
    return 0


def _load_run_config(args: argparse.Namespace) -> dict:
    config = dict(_RUN_ALL_DEFAULTS)
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise UnreadableFileError(f"cannot read config: {exc}") from exc
        if not isinstance(raw, dict):
            raise UnreadableFileError("config must be a JSON object")
        unknown = sorted(set(raw) - set(config))
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        config.update(raw)
    # Command-line flags win over config file values.
    if args.dataset is not None:
        config["dataset"] = args.dataset
    if args.format is not None:
        config["format"] = args.format
    if args.out_dir is not None:
        config["out_dir"] = args.out_dir
    if args.provider is not None:
        config["provider"] = args.provider
    if args.seed is not None:
        config["seed"] = args.seed
    if args.epochs is not None:
        config["epochs_rating"] = args.epochs
        config["epochs_disagreement"] = args.epochs
    if args.lr is not None:
        config["learning_rate"] = args.lr
    if args.batch_size is not None:
        config["batch_size"] = args.batch_size
    if not config["dataset"]:
        raise ValueError("run-all needs a dataset (config key 'dataset' or --dataset)")
    if not config["out_dir"]:
        raise ValueError("run-all needs an output directory (config key 'out_dir' or --out-dir)")
    return config


def cmd_run_all(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    out_dir = Path(config["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    fractions = (
        float(config["train_fraction"]),
        float(config["validation_fraction"]),
        float(config["test_fraction"]),
    )
    seed = int(config["seed"])

    # validate
    result = parse_hinge(config["dataset"], fmt=config["format"])
    report = _full_validation(result)
    (out_dir / "validation.json").write_text(
        report.to_json() + "\n", encoding="utf-8"
    )
    if not report.ok:
        LOGGER.error("validation found %d violation(s); aborting", len(report.violations))
        _print_json(report.to_dict())
        return 1

    # embed
    spec = ProviderSpec.parse(config["provider"])
    embeddings_dir = out_dir / "embeddings"
    _embed_dataset(result, spec, embeddings_dir)
    syn_store, hum_store = _load_embedding_dir(embeddings_dir)

    labeled = label_records(result.synthetic)
    epochs_by_task = {
        Task.RATING: config["epochs_rating"],
        Task.DISAGREEMENT: config["epochs_disagreement"],
    }
    summary_tasks: dict = {}
    for task in (Task.RATING, Task.DISAGREEMENT):
        task_dir = out_dir / task.value
        task_dir.mkdir(parents=True, exist_ok=True)

        # fuse (train and test splits share the seed and fractions)
        matrices: dict[str, FeatureMatrix] = {}
        for split_name in ("train", "test"):
            matrix = _matrix_for_split(
                labeled, task, split_name, seed, fractions, syn_store, hum_store
            )
            save_feature_matrix(matrix, task_dir / f"{split_name}.clsv")
            matrices[split_name] = matrix

        # train
        epochs = epochs_by_task[task]
        train_config = TrainConfig(
            task=task,
            epochs=None if epochs is None else int(epochs),
            batch_size=int(config["batch_size"]),
            seed=seed,
            learning_rate=float(config["learning_rate"]),
        )
        model, trace = train(train_config, matrices["train"])
        checkpoint_path = task_dir / "model.mlpc"
        save_checkpoint(model, train_config, trace, checkpoint_path)
        _write_trace_csv(trace, task_dir / "model.mlpc.trace.csv")

        # evaluate on the held-out split
        test_matrix = matrices["test"]
        predictions = predict(model, test_matrix)
        gold = [int(v) for v in test_matrix.natural_labels]
        task_report = evaluate(gold, predictions, task)
        (task_dir / "report.json").write_text(
            task_report.to_json(precision=6) + "\n", encoding="utf-8"
        )
        LOGGER.info(
            "%s: trained %d epochs, test f1_weighted=%.6f",
            task.value,
            len(trace),
            task_report.f1_weighted,
        )

        rel = lambda p: p.relative_to(out_dir).as_posix()  # noqa: E731
        summary_tasks[task.value] = {
            "report": task_report.to_dict(precision=6),
            "artifacts": {
                "train_matrix": rel(task_dir / "train.clsv"),
                "test_matrix": rel(task_dir / "test.clsv"),
                "checkpoint": rel(checkpoint_path),
                "trace_csv": rel(task_dir / "model.mlpc.trace.csv"),
                "report": rel(task_dir / "report.json"),
            },
        }

    summary = {
        "config": {**config, "dataset": str(config["dataset"]), "out_dir": str(out_dir)},
        "validation": report.to_dict(),
        "embeddings": {
            name: (Path("embeddings") / name).as_posix() for name in EMBED_FILES.values()
        },
        "tasks": summary_tasks,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    _print_json(summary)
    return 0


# ---------------------------------------------------------------------------
# parser wiring


def _add_dataset_arg(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--dataset", required=required, help="dataset file (CSV or JSON)")
    parser.add_argument(
        "--format",
        choices=("csv", "json"),
        default=None,
        help="dataset format (default: inferred from the file extension)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmxqe",
        description="Code-mixed quality estimation pipeline: validate, embed, fuse, train, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check dataset invariants, print a JSON report")
    _add_dataset_arg(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("embed", help="write the four context/source vector files")
    _add_dataset_arg(p)
    p.add_argument("--out-dir", required=True, help="directory for the .clsv files")
    p.add_argument(
        "--provider",
        required=True,
        help="embedding source: deterministic:<seed> or files:<dir>",
    )
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("fuse", help="join vectors into a labeled feature matrix")
    _add_dataset_arg(p)
    p.add_argument("--embeddings-dir", required=True, help="directory holding the four .clsv files")
    p.add_argument("--task", required=True, choices=[t.value for t in Task])
    p.add_argument("--out", required=True, help="output matrix path (labels sidecar is written next to it)")
    p.add_argument("--split", choices=SPLIT_CHOICES, default="all")
    p.add_argument("--seed", type=int, default=42, help="split seed (ignored for --split all)")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--validation-fraction", type=float, default=0.0)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("train", help="fit a classifier on a feature matrix")
    p.add_argument("--matrix", required=True, help="feature matrix path")
    p.add_argument("--task", choices=[t.value for t in Task], default=None,
                   help="default: the matrix's own task")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--epochs", type=int, default=None,
                   help="default: 3 for rating, 10 for disagreement")
    p.add_argument("--lr", type=float, default=5e-6)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels for a feature matrix")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", default=None, help="optionally also write predictions JSON here")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score a checkpoint against gold labels")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--gold", default=None,
                   help="gold labels JSON (mapping or aligned list); default: matrix sidecar labels")
    p.add_argument("--out", default=None, help="optionally also write the report here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run-all", help="validate, embed, fuse, train, and evaluate both tasks")
    p.add_argument("--config", default=None, help="flat JSON config file")
    p.add_argument("--dataset", default=None)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--provider", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None, help="override the epoch count for both tasks")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.set_defaults(func=cmd_run_all)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (NonFiniteLossError, DegenerateDistributionError) as exc:
        LOGGER.error("%s: %s", type(exc).__name__, exc)
        _print_json({"error": {"type": type(exc).__name__, "message": str(exc)}})
        return 3
    except (PipelineError, OSError, ValueError) as exc:
        LOGGER.error("%s: %s", type(exc).__name__, exc)
        _print_json({"error": {"type": type(exc).__name__, "message": str(exc)}})
        return 2


def entry_point() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
