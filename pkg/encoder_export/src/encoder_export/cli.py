"""Command-line entry point: one pairing, one task, one CLSV file.

Writes ``<pairing>.clsv`` (named so a directory of four runs is directly
usable as a file-backed embedding provider downstream) plus a JSON
manifest, and prints the manifest to stdout. Logs go to stderr at the
level named by ENCODER_EXPORT_LOG (default INFO, which includes the
per-epoch fine-tuning lines).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .corpus import export_rows, finetune_rows, read_corpus
from .errors import ExportError
from .extract import extract_cls
from .finetune import finetune, load_classifier
from .specs import DEFAULT_ENCODER, FinetuneSpec, Pairing, TaskName

LOGGER = logging.getLogger("encoder_export")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="encoder-export",
        description="Fine-tune an encoder on one pairing/task and export "
                    "CLS vectors to a CLSV file.",
    )
    parser.add_argument("--pairing", required=True,
                        choices=[p.value for p in Pairing])
    parser.add_argument("--task", required=True,
                        choices=[t.value for t in TaskName])
    parser.add_argument("--dataset", required=True)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--no-finetune", action="store_true",
                        help="export from the frozen pretrained encoder")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--lr", type=float, default=1e-6)
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--max-length", type=int, default=None)
    parser.add_argument("--encoder", default=DEFAULT_ENCODER,
                        help="model name or local directory")
    return parser


def _configure_logging() -> None:
    level = os.environ.get("ENCODER_EXPORT_LOG", "INFO").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


def run(args: argparse.Namespace) -> dict:
    from transformers import AutoModel, AutoTokenizer

    started = time.perf_counter()
    pairing = Pairing(args.pairing)
    task = TaskName(args.task)
    spec = FinetuneSpec(pairing=pairing, task=task, encoder=args.encoder,
                        learning_rate=args.lr, epochs=args.epochs,
                        batch_size=args.batch_size, seed=args.seed,
                        max_length=args.max_length)

    corpus = read_corpus(args.dataset)
    rows = export_rows(corpus, pairing)
    LOGGER.info("pairing %s: %d vectors to export", pairing.value, len(rows))

    tokenizer = AutoTokenizer.from_pretrained(spec.encoder)
    if args.no_finetune:
        model = AutoModel.from_pretrained(spec.encoder)
    else:
        train_rows = finetune_rows(corpus, pairing, task)
        LOGGER.info("fine-tuning on %d examples (%s / %s)",
                    len(train_rows), pairing.value, task.value)
        model = finetune(spec, train_rows, tokenizer,
                         model=load_classifier(spec))

    keys, vectors = extract_cls(model, tokenizer, rows,
                                batch_size=spec.batch_size,
                                max_length=spec.max_length)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    output = out_dir / pairing.output_name
    from .clsv import write_clsv

    write_clsv(output, keys, vectors)
    manifest = {
        "pairing": pairing.value,
        "task": task.value,
        "dataset": str(args.dataset),
        "encoder": spec.encoder,
        "finetuned": not args.no_finetune,
        "epochs": spec.epochs,
        "learning_rate": spec.learning_rate,
        "batch_size": spec.batch_size,
        "seed": spec.seed,
        "count": len(keys),
        "dim": int(vectors.shape[1]),
        "output": output.name,
        "wall_time_seconds": round(time.perf_counter() - started, 3),
    }
    manifest_path = out_dir / f"{pairing.value.replace('-', '_')}.manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n",
                             encoding="utf-8")
    return manifest


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        manifest = run(args)
    except ExportError as exc:
        LOGGER.error("%s: %s", type(exc).__name__, exc)
        print(json.dumps({"error": {"type": type(exc).__name__,
                                    "message": str(exc)}}, indent=2))
        return 2
    print(json.dumps(manifest, indent=2))
    return 0


def entry_point() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
