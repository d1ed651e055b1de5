"""Shared fixtures: dataset builders and canned pipeline inputs."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

FIXTURE_CSV = Path(__file__).parent / "data" / "hinge_sample.csv"

HEADER = [
    "pair_id", "english", "hindi", "human_hinglish", "record_id",
    "generator", "synthetic_hinglish", "rating1", "rating2",
    "average_rating", "disagreement",
]

# Three pairs / four synthetic records: the smallest dataset that exercises
# continuation rows, multi-reference pairs, and both generators.
TINY_PAIRS = [
    ("t1", "Where are you going?", "तुम कहाँ जा रहे हो?",
     ["Tum kahan ja rahe ho?", "Kahan ja rahe ho tum?"]),
    ("t2", "The weather is nice today.", "आज मौसम अच्छा है।",
     ["Aaj weather accha hai.", "Mausam aaj nice hai."]),
    ("t3", "I forgot my keys at home.", "मैं अपनी चाबियाँ घर पर भूल गया।",
     ["Main apni keys ghar par bhool gaya.", "Keys ghar pe hi reh gayi meri."]),
]

TINY_SYNTH = [
    # (record_id, pair_id, generator, text, r1, r2)
    ("a1", "t1", "WAC", "Tum kahan ja rahe ho?", 9, 8),
    ("a2", "t1", "PAC", "Where tum ja rahe ho?", 3, 5),
    ("a3", "t2", "WAC", "Aaj mausam nice hai.", 7, 7),
    ("a4", "t3", "PAC", "Main meri keys home par forgot.", 2, 1),
]


def write_rows_csv(path: Path, rows, header=HEADER) -> Path:
    """Write raw rows under the standard header; rows control their own
    malformations."""
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def dataset_rows(pairs, synth, with_provided=False, provided_fn=None):
    """Rows in the standard layout: pair columns only on the first row of
    each pair, references as a JSON array string."""
    by_pair: dict[str, list] = {}
    for rec in synth:
        by_pair.setdefault(rec[1], []).append(rec)
    rows = []
    for pid, en, hi, refs in pairs:
        first = True
        for rid, _, gen, text, r1, r2 in by_pair.get(pid, []):
            if with_provided:
                avg, dis = (r1 + r2 + 1) // 2, abs(r1 - r2)
                if provided_fn is not None:
                    avg, dis = provided_fn(rid, avg, dis)
                extra = [avg, dis]
            else:
                extra = ["", ""]
            if first:
                rows.append([pid, en, hi, json.dumps(refs, ensure_ascii=False),
                             rid, gen, text, r1, r2, *extra])
                first = False
            else:
                rows.append([pid, "", "", "", rid, gen, text, r1, r2, *extra])
        if pid not in by_pair:
            rows.append([pid, en, hi, json.dumps(refs, ensure_ascii=False),
                         "", "", "", "", "", "", ""])
    return rows


def write_dataset_json(path: Path, pairs, synth, with_provided=False) -> Path:
    """Same content as the CSV layout but as a JSON array of row objects."""
    objects = []
    by_pair: dict[str, list] = {}
    for rec in synth:
        by_pair.setdefault(rec[1], []).append(rec)
    for pid, en, hi, refs in pairs:
        first = True
        for rid, _, gen, text, r1, r2 in by_pair.get(pid, []):
            obj = {"pair_id": pid, "record_id": rid, "generator": gen,
                   "synthetic_hinglish": text, "rating1": r1, "rating2": r2}
            if first:
                obj.update({"english": en, "hindi": hi, "human_hinglish": refs})
                first = False
            if with_provided:
                obj["average_rating"] = (r1 + r2 + 1) // 2
                obj["disagreement"] = abs(r1 - r2)
            objects.append(obj)
        if pid not in by_pair:
            objects.append({"pair_id": pid, "english": en, "hindi": hi,
                            "human_hinglish": refs})
    path.write_text(json.dumps(objects, ensure_ascii=False, indent=1),
                    encoding="utf-8")
    return path


@pytest.fixture
def tiny_csv(tmp_path) -> Path:
    return write_rows_csv(tmp_path / "tiny.csv", dataset_rows(TINY_PAIRS, TINY_SYNTH))


@pytest.fixture
def tiny_json(tmp_path) -> Path:
    return write_dataset_json(tmp_path / "tiny.json", TINY_PAIRS, TINY_SYNTH)


@pytest.fixture
def fixture_csv() -> Path:
    assert FIXTURE_CSV.exists()
    return FIXTURE_CSV
