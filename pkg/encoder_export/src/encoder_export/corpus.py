"""Minimal corpus reader and per-pairing row construction.

Reads the same CSV/JSON layout the downstream pipeline consumes but keeps
only what the encoder needs: pair texts, references, candidates, and the
two annotator ratings. Validation beyond that is the downstream
pipeline's job.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .errors import CorpusError
from .specs import Pairing, TaskName


@dataclass
class Pair:
    pair_id: str
    english: str
    hindi: str
    references: list[str] = field(default_factory=list)


@dataclass
class Candidate:
    record_id: str
    pair_id: str
    text: str
    rating_1: int
    rating_2: int


@dataclass
class Corpus:
    pairs: list[Pair]
    candidates: list[Candidate]

    def pair_index(self) -> dict[str, Pair]:
        return {p.pair_id: p for p in self.pairs}


class ExportRow(NamedTuple):
    """One vector to produce: key plus the (context, hinglish) sentences."""

    key: str
    sentence_a: str
    sentence_b: str


class TrainRow(NamedTuple):
    """One supervised example for fine-tuning."""

    sentence_a: str
    sentence_b: str
    label: int


def syn_key(record_id: str, context: str) -> str:
    return f"syn:{record_id}:{context}"


def hum_key(pair_id: str, index: int, context: str) -> str:
    return f"hum:{pair_id}:{index}:{context}"


# ---------------------------------------------------------------------------
# reading


def _references(raw) -> list[str]:
    if isinstance(raw, list):
        return [str(r) for r in raw]
    text = str(raw).strip()
    if not text:
        return []
    try:
        parsed = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"human_hinglish is not a JSON array: {exc}") from exc
    if not isinstance(parsed, list):
        raise CorpusError("human_hinglish must be a JSON array")
    return [str(r) for r in parsed]


def _rating(raw, name: str, line: int) -> int:
    try:
        value = int(str(raw).strip())
    except (TypeError, ValueError):
        raise CorpusError(f"line {line}: {name} is not an integer") from None
    if not 1 <= value <= 10:
        raise CorpusError(f"line {line}: {name} must be in 1..10, got {value}")
    return value


def read_corpus(path: str | Path) -> Corpus:
    """Parse the dataset; raises CorpusError on anything unusable."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc

    if path.suffix.lower() == ".json":
        rows = json.loads(text)
        if not isinstance(rows, list):
            raise CorpusError("JSON dataset must be an array of row objects")
        numbered = list(enumerate(rows, start=1))
    else:
        reader = csv.DictReader(text.splitlines())
        numbered = list(enumerate(reader, start=2))  # line 1 is the header

    pairs: dict[str, Pair] = {}
    candidates: list[Candidate] = []
    for line, row in numbered:
        pid = str(row.get("pair_id") or "").strip()
        if not pid:
            raise CorpusError(f"line {line}: missing pair_id")
        if pid not in pairs:
            english = str(row.get("english") or "").strip()
            hindi = str(row.get("hindi") or "").strip()
            if not english or not hindi:
                raise CorpusError(f"line {line}: first row of pair {pid!r} "
                                  "must carry english and hindi texts")
            pairs[pid] = Pair(pid, english, hindi,
                              _references(row.get("human_hinglish") or ""))

        rid = str(row.get("record_id") or "").strip()
        if not rid:
            continue  # pair-only row
        synthetic = str(row.get("synthetic_hinglish") or "").strip()
        if not synthetic:
            raise CorpusError(f"line {line}: record {rid!r} has no text")
        candidates.append(Candidate(
            record_id=rid,
            pair_id=pid,
            text=synthetic,
            rating_1=_rating(row.get("rating1"), "rating1", line),
            rating_2=_rating(row.get("rating2"), "rating2", line),
        ))
    return Corpus(list(pairs.values()), candidates)


# ---------------------------------------------------------------------------
# row construction


def _context_text(pair: Pair, context: str) -> str:
    return pair.english if context == "en" else pair.hindi


def export_rows(corpus: Corpus, pairing: Pairing) -> list[ExportRow]:
    """One row per vector the pairing exports, in corpus order."""
    index = corpus.pair_index()
    rows: list[ExportRow] = []
    if pairing.source == "syn":
        for cand in corpus.candidates:
            pair = index.get(cand.pair_id)
            if pair is None:
                raise CorpusError(f"record {cand.record_id!r} references "
                                  f"unknown pair {cand.pair_id!r}")
            rows.append(ExportRow(syn_key(cand.record_id, pairing.context),
                                  _context_text(pair, pairing.context),
                                  cand.text))
    else:
        for pair in corpus.pairs:
            for i, reference in enumerate(pair.references):
                rows.append(ExportRow(hum_key(pair.pair_id, i, pairing.context),
                                      _context_text(pair, pairing.context),
                                      reference))
    return rows


def finetune_rows(corpus: Corpus, pairing: Pairing, task: TaskName) -> list[TrainRow]:
    """Supervised examples for one fine-tuning run.

    Synthetic pairings label each candidate with its own task class.
    Human references carry no ratings of their own, so the HUM pairings
    broadcast the pair's candidate labels across its references: one
    example per (reference, candidate of the same pair). This is an
    interpretation — references are treated as sharing the quality
    profile of their pair's candidates — and `--no-finetune` is the
    conservative alternative.
    """
    index = corpus.pair_index()
    rows: list[TrainRow] = []
    if pairing.source == "syn":
        for cand in corpus.candidates:
            pair = index.get(cand.pair_id)
            if pair is None:
                raise CorpusError(f"record {cand.record_id!r} references "
                                  f"unknown pair {cand.pair_id!r}")
            rows.append(TrainRow(_context_text(pair, pairing.context),
                                 cand.text,
                                 task.class_of(cand.rating_1, cand.rating_2)))
    else:
        by_pair: dict[str, list[Candidate]] = {}
        for cand in corpus.candidates:
            by_pair.setdefault(cand.pair_id, []).append(cand)
        for pair in corpus.pairs:
            for reference in pair.references:
                for cand in by_pair.get(pair.pair_id, []):
                    rows.append(TrainRow(
                        _context_text(pair, pairing.context),
                        reference,
                        task.class_of(cand.rating_1, cand.rating_2),
                    ))
    return rows
