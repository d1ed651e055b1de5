"""Ingestion, labeling, validation, and splitting of the rated Hinglish corpus.

The canonical input is a flat table (CSV or JSON array) where each row carries
an English-Hindi sentence pair, its human Hinglish references, and usually one
machine-generated Hinglish sentence with two annotator ratings. Rows sharing a
``pair_id`` repeat the pair columns; the first occurrence defines the pair.

Two targets are derived per synthetic sentence:

* average rating: half-up rounded mean of the two annotator ratings (1..10)
* disagreement: absolute difference of the two ratings (0..9)

Rows that fail structural checks are skipped and reported, never fatal, since
scraped code-mixed corpora are noisy. Softer problems (a pair with fewer than
two references, blank source text) are surfaced by :func:`validate_dataset`
while the records stay loadable.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import EmptyInputError, OutOfRangeError, UnreadableFileError
from .tasks import Task

log = logging.getLogger(__name__)

RATING_MIN = 1
RATING_MAX = 10

CSV_COLUMNS = (
    "pair_id",
    "english",
    "hindi",
    "human_hinglish",
    "record_id",
    "generator",
    "synthetic_hinglish",
    "rating1",
    "rating2",
)
OPTIONAL_CSV_COLUMNS = ("average_rating", "disagreement")


class Generator(enum.Enum):
    """Which generation algorithm produced a synthetic sentence."""

    WAC = "WAC"
    PAC = "PAC"


@dataclass(frozen=True)
class SentencePairRecord:
    """One English-Hindi pair with its ordered human Hinglish references."""

    pair_id: str
    english_text: str
    hindi_text: str
    human_hinglish: tuple[str, ...]


@dataclass(frozen=True)
class SyntheticRecord:
    """One machine-generated Hinglish sentence with its two annotator ratings.

    ``provided_average`` and ``provided_disagreement`` mirror optional source
    columns; when present they are audited against recomputed values, with the
    recomputed values authoritative for training.
    """

    record_id: str
    pair_id: str
    generator: Generator
    hinglish_text: str
    rating1: int
    rating2: int
    provided_average: int | None = None
    provided_disagreement: int | None = None


@dataclass(frozen=True)
class LabeledRecord:
    """A synthetic record with both derived targets attached."""

    record: SyntheticRecord
    average_rating: int
    disagreement: int


@dataclass(frozen=True)
class MalformedRow:
    """A skipped input row and why it was skipped."""

    line: int
    reason: str


class ParseResult(NamedTuple):
    pairs: list[SentencePairRecord]
    synthetic: list[SyntheticRecord]
    malformed: list[MalformedRow]


@dataclass
class ValidationReport:
    """Counts and findings over a parsed dataset.

    ``violations`` are invariant breaches (structural problems); ``advisories``
    are audit findings such as source-label mismatches that do not block the
    pipeline.
    """

    pair_count: int = 0
    human_count: int = 0
    synthetic_count: int = 0
    generator_counts: dict[str, int] = field(default_factory=dict)
    violations: list[dict] = field(default_factory=list)
    advisories: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "pair_count": self.pair_count,
            "human_count": self.human_count,
            "synthetic_count": self.synthetic_count,
            "generator_counts": dict(self.generator_counts),
            "violations": list(self.violations),
            "advisories": list(self.advisories),
            "ok": self.ok,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, ensure_ascii=False)


@dataclass
class DatasetSplit:
    """Disjoint, exhaustive partition of labeled records."""

    train: list[LabeledRecord]
    validation: list[LabeledRecord]
    test: list[LabeledRecord]
    seed: int
    fractions: tuple[float, float, float]


def _check_rating(value: int, name: str) -> None:
    if not RATING_MIN <= value <= RATING_MAX:
        raise OutOfRangeError(
            f"{name}={value} outside [{RATING_MIN}, {RATING_MAX}]"
        )


def compute_average_rating(r1: int, r2: int) -> int:
    """Half-up rounded mean of two ratings, e.g. (7, 4) -> 6.

    Integer arithmetic only: (r1 + r2 + 1) // 2 rounds the .5 cases up and
    leaves exact means untouched.
    """
    _check_rating(r1, "rating1")
    _check_rating(r2, "rating2")
    return (r1 + r2 + 1) // 2


def compute_disagreement(r1: int, r2: int) -> int:
    """Absolute difference of the two ratings, in 0..9."""
    _check_rating(r1, "rating1")
    _check_rating(r2, "rating2")
    return abs(r1 - r2)


def label_records(synthetic: Sequence[SyntheticRecord]) -> list[LabeledRecord]:
    """Attach both derived targets to every record, preserving order.

    Mismatches against source-provided label columns are logged; the
    recomputed values win. Use :func:`audit_provided_labels` for the
    structured mismatch list.
    """
    labeled = [
        LabeledRecord(
            record=rec,
            average_rating=compute_average_rating(rec.rating1, rec.rating2),
            disagreement=compute_disagreement(rec.rating1, rec.rating2),
        )
        for rec in synthetic
    ]
    mismatches = audit_provided_labels(synthetic)
    if mismatches:
        log.warning(
            "%d source label value(s) disagree with recomputed labels; "
            "recomputed values are used", len(mismatches),
        )
        for entry in mismatches:
            log.debug("label mismatch: %s", entry)
    return labeled


def audit_provided_labels(synthetic: Iterable[SyntheticRecord]) -> list[dict]:
    """Compare source-provided label columns against recomputed values."""
    mismatches: list[dict] = []
    for rec in synthetic:
        avg = compute_average_rating(rec.rating1, rec.rating2)
        dis = compute_disagreement(rec.rating1, rec.rating2)
        if rec.provided_average is not None and rec.provided_average != avg:
            mismatches.append(
                {
                    "kind": "average_rating_mismatch",
                    "record_id": rec.record_id,
                    "provided": rec.provided_average,
                    "recomputed": avg,
                }
            )
        if rec.provided_disagreement is not None and rec.provided_disagreement != dis:
            mismatches.append(
                {
                    "kind": "disagreement_mismatch",
                    "record_id": rec.record_id,
                    "provided": rec.provided_disagreement,
                    "recomputed": dis,
                }
            )
    return mismatches


class _RowParser:
    """Shared row semantics for the CSV and JSON frontends."""

    def __init__(self) -> None:
        self.pairs: list[SentencePairRecord] = []
        self.synthetic: list[SyntheticRecord] = []
        self.malformed: list[MalformedRow] = []
        self._pair_index: dict[str, SentencePairRecord] = {}
        self._record_ids: set[str] = set()

    def result(self) -> ParseResult:
        if self.malformed:
            log.warning("skipped %d malformed row(s)", len(self.malformed))
        return ParseResult(self.pairs, self.synthetic, self.malformed)

    def feed(self, line: int, row: dict) -> None:
        try:
            self._feed(line, row)
        except _RowError as exc:
            self.malformed.append(MalformedRow(line=line, reason=str(exc)))

    def _feed(self, line: int, row: dict) -> None:
        pair_id = _text(row.get("pair_id")).strip()
        if not pair_id:
            raise _RowError("missing pair_id")

        english = _rstrip_text(row.get("english"))
        hindi = _rstrip_text(row.get("hindi"))
        human = _parse_human(row.get("human_hinglish"))
        defines_pair = bool(english or hindi or human is not None)

        known = self._pair_index.get(pair_id)
        if known is None:
            # First sighting defines the pair, even with blank fields; blank
            # source text is a validation finding, not a parse failure.
            pair = SentencePairRecord(
                pair_id=pair_id,
                english_text=english,
                hindi_text=hindi,
                human_hinglish=human if human is not None else (),
            )
            self._pair_index[pair_id] = pair
            self.pairs.append(pair)
        elif defines_pair:
            same = (
                english == known.english_text
                and hindi == known.hindi_text
                and (human is None or human == known.human_hinglish)
            )
            if not same:
                raise _RowError(
                    f"conflicting redefinition of pair {pair_id!r}"
                )

        record_id = _text(row.get("record_id")).strip()
        generator_raw = _text(row.get("generator")).strip()
        synthetic_text = _rstrip_text(row.get("synthetic_hinglish"))
        r1_raw = _text(row.get("rating1")).strip()
        r2_raw = _text(row.get("rating2")).strip()

        if not any((record_id, generator_raw, synthetic_text, r1_raw, r2_raw)):
            return  # pair-only row

        if not record_id:
            raise _RowError("synthetic columns present but record_id missing")
        if record_id in self._record_ids:
            raise _RowError(f"duplicate record_id {record_id!r}")
        try:
            generator = Generator(generator_raw.upper())
        except ValueError:
            raise _RowError(f"unknown generator {generator_raw!r}") from None
        if not synthetic_text.strip():
            raise _RowError("synthetic_hinglish is empty")
        r1 = _parse_rating(r1_raw, "rating1")
        r2 = _parse_rating(r2_raw, "rating2")

        self._record_ids.add(record_id)
        self.synthetic.append(
            SyntheticRecord(
                record_id=record_id,
                pair_id=pair_id,
                generator=generator,
                hinglish_text=synthetic_text,
                rating1=r1,
                rating2=r2,
                provided_average=_parse_optional_int(
                    row.get("average_rating"), "average_rating"
                ),
                provided_disagreement=_parse_optional_int(
                    row.get("disagreement"), "disagreement"
                ),
            )
        )


class _RowError(Exception):
    pass


def _text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return str(value)


def _rstrip_text(value) -> str:
    # Leading whitespace is preserved; only trailing whitespace is trimmed.
    return _text(value).rstrip()


def _parse_human(value) -> tuple[str, ...] | None:
    """Decode the reference list: a JSON array string or a native list."""
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        text = str(value).strip()
        if not text:
            return None
        try:
            items = json.loads(text)
        except json.JSONDecodeError as exc:
            raise _RowError(f"human_hinglish is not a JSON array: {exc.msg}")
        if not isinstance(items, list):
            raise _RowError("human_hinglish must decode to a list")
    out = []
    for item in items:
        if not isinstance(item, str):
            raise _RowError("human_hinglish entries must be strings")
        out.append(item.rstrip())
    return tuple(out)


def _parse_rating(raw, name: str) -> int:
    value = _parse_optional_int(raw, name)
    if value is None:
        raise _RowError(f"{name} is missing")
    if not RATING_MIN <= value <= RATING_MAX:
        raise _RowError(f"{name}={value} outside [{RATING_MIN}, {RATING_MAX}]")
    return value


def _parse_optional_int(raw, name: str) -> int | None:
    if raw is None:
        return None
    if isinstance(raw, bool):
        raise _RowError(f"{name} must be an integer")
    if isinstance(raw, int):
        return raw
    if isinstance(raw, float):
        if not raw.is_integer():
            raise _RowError(f"{name}={raw} is not an integer")
        return int(raw)
    text = str(raw).strip()
    if not text:
        return None
    try:
        return int(text)
    except ValueError:
        raise _RowError(f"{name}={text!r} is not an integer") from None


def parse_hinge(path: str | Path, fmt: str | None = None) -> ParseResult:
    """Parse a CSV or JSON dataset file into pair and synthetic records.

    ``fmt`` is ``"csv"`` or ``"json"``; when omitted it is inferred from the
    file extension. Unreadable files or files whose header does not match the
    documented schema abort with :class:`UnreadableFileError`; individual bad
    rows are skipped and returned in ``malformed``.
    """
    path = Path(path)
    if fmt is None:
        suffix = path.suffix.lower()
        if suffix == ".csv":
            fmt = "csv"
        elif suffix in (".json", ".js"):
            fmt = "json"
        else:
            raise UnreadableFileError(
                f"cannot infer format from {path.name!r}; pass fmt='csv' or 'json'"
            )
    fmt = fmt.lower()
    if fmt not in ("csv", "json"):
        raise UnreadableFileError(f"unknown format {fmt!r}")

    parser = _RowParser()
    if fmt == "csv":
        try:
            with path.open("r", encoding="utf-8-sig", newline="") as handle:
                reader = csv.DictReader(handle)
                header = reader.fieldnames or []
                missing = [c for c in CSV_COLUMNS if c not in header]
                if missing:
                    raise UnreadableFileError(
                        f"{path}: header missing required column(s): "
                        f"{', '.join(missing)}"
                    )
                for row in reader:
                    parser.feed(reader.line_num, row)
        except OSError as exc:
            raise UnreadableFileError(f"cannot read {path}: {exc}") from exc
    else:
        try:
            raw = path.read_text(encoding="utf-8-sig")
        except OSError as exc:
            raise UnreadableFileError(f"cannot read {path}: {exc}") from exc
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise UnreadableFileError(f"{path}: invalid JSON: {exc.msg}") from exc
        if not isinstance(data, list):
            raise UnreadableFileError(f"{path}: top level must be a JSON array")
        for index, row in enumerate(data, start=1):
            if not isinstance(row, dict):
                parser.malformed.append(
                    MalformedRow(line=index, reason="array element is not an object")
                )
                continue
            parser.feed(index, row)
    return parser.result()


def validate_dataset(
    pairs: Sequence[SentencePairRecord],
    synthetic: Sequence[SyntheticRecord],
) -> ValidationReport:
    """Count records and collect invariant violations and label advisories."""
    report = ValidationReport()
    report.pair_count = len(pairs)
    report.human_count = sum(len(p.human_hinglish) for p in pairs)
    report.synthetic_count = len(synthetic)
    counts = {g.value: 0 for g in Generator}
    for rec in synthetic:
        counts[rec.generator.value] += 1
    report.generator_counts = counts

    pair_ids = set()
    for pair in pairs:
        pair_ids.add(pair.pair_id)
        if len(pair.human_hinglish) < 2:
            report.violations.append(
                {
                    "kind": "too_few_references",
                    "pair_id": pair.pair_id,
                    "count": len(pair.human_hinglish),
                }
            )
        if not pair.english_text.strip():
            report.violations.append(
                {"kind": "empty_english", "pair_id": pair.pair_id}
            )
        if not pair.hindi_text.strip():
            report.violations.append(
                {"kind": "empty_hindi", "pair_id": pair.pair_id}
            )
        for index, ref in enumerate(pair.human_hinglish):
            if not ref.strip():
                report.violations.append(
                    {
                        "kind": "empty_reference",
                        "pair_id": pair.pair_id,
                        "index": index,
                    }
                )

    for rec in synthetic:
        if rec.pair_id not in pair_ids:
            report.violations.append(
                {"kind": "unresolved_pair", "record_id": rec.record_id,
                 "pair_id": rec.pair_id}
            )

    report.advisories = audit_provided_labels(synthetic)
    return report


def split_dataset(
    records: Sequence[LabeledRecord],
    seed: int,
    fractions: Sequence[float],
    task: Task = Task.RATING,
) -> DatasetSplit:
    """Deterministic stratified train/validation/test partition.

    Stratification groups records by the chosen task's label. Within each
    group, counts follow the fractions by largest-remainder rounding, and any
    group with at least three members is guaranteed a presence in every split
    whose fraction is positive. Records keep their input order inside each
    split.
    """
    if len(fractions) != 3:
        raise ValueError("fractions must have exactly three entries")
    fracs = tuple(float(f) for f in fractions)
    if any(f < 0 for f in fracs):
        raise ValueError(f"fractions must be non-negative, got {fracs}")
    if abs(sum(fracs) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fracs)!r}")
    if not records:
        raise EmptyInputError("cannot split an empty record list")

    def group_label(rec: LabeledRecord) -> int:
        return rec.average_rating if task is Task.RATING else rec.disagreement

    groups: dict[int, list[int]] = {}
    for index, rec in enumerate(records):
        groups.setdefault(group_label(rec), []).append(index)

    positive = [i for i, f in enumerate(fracs) if f > 0]
    rng = np.random.default_rng(seed)
    assigned: list[list[int]] = [[], [], []]

    for label in sorted(groups):
        members = groups[label]
        size = len(members)
        base = [int(f * size) for f in fracs]
        shortfall = size - sum(base)
        remainders = sorted(
            range(3), key=lambda i: (-(fracs[i] * size - base[i]), i)
        )
        for i in remainders[:shortfall]:
            base[i] += 1
        if size >= 3:
            # Guarantee presence in every split with a positive fraction.
            for i in positive:
                while base[i] == 0:
                    donor = max(
                        (j for j in range(3) if base[j] > 1 or (base[j] == 1 and j not in positive)),
                        key=lambda j: base[j],
                    )
                    base[donor] -= 1
                    base[i] += 1
        order = rng.permutation(size)
        cursor = 0
        for split_index in range(3):
            take = base[split_index]
            chosen = [members[order[k]] for k in range(cursor, cursor + take)]
            assigned[split_index].extend(chosen)
            cursor += take

    parts = [
        [records[i] for i in sorted(block)]
        for block in assigned
    ]
    return DatasetSplit(
        train=parts[0],
        validation=parts[1],
        test=parts[2],
        seed=seed,
        fractions=fracs,
    )
