"""Encoder fine-tuning and CLS-vector export for Hinglish sentence pairs.

Pairs each Hinglish sentence (synthetic candidate or human reference)
with its English or Hindi source, optionally fine-tunes a pretrained
multilingual encoder per (pairing, task) combination, and writes the
position-0 last-hidden-layer vectors to CLSV files keyed the way the
downstream quality-estimation pipeline expects.
"""

from .clsv import read_clsv, write_clsv
from .corpus import (
    Candidate,
    Corpus,
    ExportRow,
    Pair,
    TrainRow,
    export_rows,
    finetune_rows,
    hum_key,
    read_corpus,
    syn_key,
)
from .errors import CorpusError, EmptySentenceError, ExportError, TruncationError
from .extract import extract_cls
from .finetune import finetune, load_classifier
from .pairing import PairEncoding, build_pair_input, collate
from .specs import DEFAULT_ENCODER, NUM_CLASSES, FinetuneSpec, Pairing, TaskName

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "Corpus",
    "CorpusError",
    "DEFAULT_ENCODER",
    "EmptySentenceError",
    "ExportError",
    "ExportRow",
    "FinetuneSpec",
    "NUM_CLASSES",
    "Pair",
    "PairEncoding",
    "Pairing",
    "TaskName",
    "TrainRow",
    "TruncationError",
    "build_pair_input",
    "collate",
    "export_rows",
    "extract_cls",
    "finetune",
    "finetune_rows",
    "hum_key",
    "load_classifier",
    "read_clsv",
    "read_corpus",
    "syn_key",
    "write_clsv",
]
