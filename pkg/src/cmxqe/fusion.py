"""Feature assembly: human-reference averaging and four-way concatenation.

Each synthetic sentence becomes one 3072-dim row with fixed segment order

    [ syn-EN | syn-HI | humAvg-EN | humAvg-HI ]   (768 each)

where the human segments are the arithmetic mean over all references of the
sentence's pair. No scaling or normalization is applied. Averaging runs in
64-bit accumulation over references sorted by index, so results are bitwise
reproducible regardless of store construction order.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import LabeledRecord
from .embeddings import DIM, EmbeddingKey, EmbeddingStore, read_clsv, write_clsv
from .errors import (
    DimMismatchError,
    LabelOutOfRangeError,
    LengthMismatchError,
    MissingKeyError,
    NoHumanVectorsError,
    UnreadableFileError,
)
from .tasks import NUM_CLASSES, Task

log = logging.getLogger(__name__)

FUSED_DIM = 4 * DIM
SEGMENT_ORDER = ("syn_en", "syn_hi", "hum_en_avg", "hum_hi_avg")


@dataclass(frozen=True)
class FusedFeature:
    """One assembled input row; ``values`` has the fixed segment layout."""

    record_id: str
    values: np.ndarray

    def segment(self, name: str) -> np.ndarray:
        index = SEGMENT_ORDER.index(name)
        return self.values[index * DIM:(index + 1) * DIM]


@dataclass
class FeatureMatrix:
    """Aligned design matrix and class-index labels for one task.

    ``labels`` holds class indices 0..9: rating labels are shifted down by
    one, disagreement labels are used directly.
    """

    record_ids: list[str]
    features: np.ndarray
    labels: np.ndarray
    task: Task

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[1] != FUSED_DIM:
            raise DimMismatchError(
                FUSED_DIM,
                int(self.features.shape[1]) if self.features.ndim == 2 else -1,
                where="feature matrix",
            )
        if not (len(self.record_ids) == self.features.shape[0] == self.labels.shape[0]):
            raise LengthMismatchError(
                f"rows={self.features.shape[0]} labels={self.labels.shape[0]} "
                f"ids={len(self.record_ids)}"
            )
        if len(self.labels) and (
            self.labels.min() < 0 or self.labels.max() >= NUM_CLASSES
        ):
            raise LabelOutOfRangeError(
                f"class indices must lie in [0, {NUM_CLASSES})"
            )

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def natural_labels(self) -> np.ndarray:
        """Labels on the task's own scale (rating 1..10, disagreement 0..9)."""
        return self.labels + self.task.label_offset

    def subset(self, record_ids: Sequence[str]) -> "FeatureMatrix":
        """Rows for the given ids, in the given order."""
        position = {rid: i for i, rid in enumerate(self.record_ids)}
        missing = [rid for rid in record_ids if rid not in position]
        if missing:
            raise MissingKeyError(missing)
        rows = [position[rid] for rid in record_ids]
        return FeatureMatrix(
            record_ids=list(record_ids),
            features=self.features[rows],
            labels=self.labels[rows],
            task=self.task,
        )


def average_human_vectors(
    store: EmbeddingStore, pair_id: str, context: str
) -> np.ndarray:
    """Elementwise mean over all human reference vectors of a pair/context."""
    rows = _human_rows(store, pair_id, context)
    if not rows:
        raise NoHumanVectorsError(
            f"no human vectors for pair {pair_id!r} context {context!r}"
        )
    return _mean_rows(rows, store.dim)


def _human_rows(
    store: EmbeddingStore, pair_id: str, context: str
) -> list[np.ndarray]:
    found: list[tuple[int, np.ndarray]] = []
    prefix = f"hum:{pair_id}:"
    suffix = f":{context}"
    for key in store.keys():
        if key.startswith(prefix) and key.endswith(suffix):
            parsed = EmbeddingKey.parse(key)
            if parsed.owner_id == pair_id and parsed.context == context:
                found.append((parsed.human_index, store.get(key)))
    found.sort(key=lambda item: item[0])
    return [vec for _, vec in found]


def _mean_rows(rows: Sequence[np.ndarray], dim: int) -> np.ndarray:
    total = np.zeros(dim, dtype=np.float64)
    for vec in rows:  # fixed order: summation is bitwise reproducible
        total += vec.astype(np.float64)
    return (total / len(rows)).astype(np.float32)


def assemble_feature(
    record: LabeledRecord,
    syn_en: np.ndarray,
    syn_hi: np.ndarray,
    hum_en_avg: np.ndarray,
    hum_hi_avg: np.ndarray,
) -> FusedFeature:
    """Concatenate the four source vectors in the fixed segment order."""
    segments = (syn_en, syn_hi, hum_en_avg, hum_hi_avg)
    for seg in segments:
        arr = np.asarray(seg)
        if arr.shape != (DIM,):
            raise DimMismatchError(DIM, int(arr.size), where="assemble_feature")
    values = np.concatenate([np.asarray(s, dtype=np.float32) for s in segments])
    return FusedFeature(record_id=record.record.record_id, values=values)


def build_feature_matrix(
    records: Sequence[LabeledRecord],
    syn_store: EmbeddingStore,
    hum_store: EmbeddingStore,
    task: Task,
) -> FeatureMatrix:
    """One row per record in input order, labels picked by task.

    Missing synthetic keys are aggregated into a single error listing every
    absence. Human averages are computed once per (pair, context).
    """
    # Index human vectors by (pair, context) once; grouped means are reused.
    grouped: dict[tuple[str, str], list[tuple[int, str]]] = {}
    for key in hum_store.keys():
        try:
            parsed = EmbeddingKey.parse(key)
        except ValueError:
            continue
        if parsed.source != "hum":
            continue
        grouped.setdefault((parsed.owner_id, parsed.context), []).append(
            (parsed.human_index, key)
        )
    averages: dict[tuple[str, str], np.ndarray] = {}
    for group_key, members in grouped.items():
        members.sort(key=lambda item: item[0])
        rows = [hum_store.get(key) for _, key in members]
        averages[group_key] = _mean_rows(rows, hum_store.dim)

    missing: list[str] = []
    feature_rows: list[np.ndarray] = []
    labels: list[int] = []
    ids: list[str] = []
    for rec in records:
        rid = rec.record.record_id
        pid = rec.record.pair_id
        row_keys = [
            EmbeddingKey("syn", rid, "en").render(),
            EmbeddingKey("syn", rid, "hi").render(),
        ]
        absent = [k for k in row_keys if k not in syn_store]
        for context in ("en", "hi"):
            if (pid, context) not in averages:
                absent.append(f"hum:{pid}:*:{context}")
        if absent:
            missing.extend(absent)
            continue
        fused = assemble_feature(
            rec,
            syn_store.get(row_keys[0]),
            syn_store.get(row_keys[1]),
            averages[(pid, "en")],
            averages[(pid, "hi")],
        )
        feature_rows.append(fused.values)
        labels.append(task.to_class_index(
            rec.average_rating if task is Task.RATING else rec.disagreement
        ))
        ids.append(rid)
    if missing:
        raise MissingKeyError(missing)
    features = (
        np.stack(feature_rows)
        if feature_rows
        else np.empty((0, FUSED_DIM), dtype=np.float32)
    )
    return FeatureMatrix(
        record_ids=ids,
        features=features,
        labels=np.asarray(labels, dtype=np.int64),
        task=task,
    )


def labels_sidecar_path(matrix_path: str | Path) -> Path:
    """The JSON labels file that accompanies a persisted matrix."""
    matrix_path = Path(matrix_path)
    return matrix_path.with_name(matrix_path.name + ".labels.json")


def save_feature_matrix(matrix: FeatureMatrix, path: str | Path) -> None:
    """Persist rows in the vector container (dim 3072, key = record id)
    plus a JSON sidecar mapping record ids to natural-scale labels."""
    path = Path(path)
    store = EmbeddingStore(dim=FUSED_DIM)
    for rid, row in zip(matrix.record_ids, matrix.features):
        store.add(rid, row)
    write_clsv(store, path)
    sidecar = {
        "task": matrix.task.value,
        "labels": {
            rid: int(label)
            for rid, label in zip(matrix.record_ids, matrix.natural_labels)
        },
    }
    labels_sidecar_path(path).write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_feature_matrix(path: str | Path) -> FeatureMatrix:
    """Load a persisted matrix; rows come back sorted by record id."""
    path = Path(path)
    store = read_clsv(path, expected_dim=FUSED_DIM)
    sidecar_path = labels_sidecar_path(path)
    try:
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise UnreadableFileError(f"cannot read labels sidecar: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UnreadableFileError(f"invalid labels sidecar: {exc.msg}") from exc
    if not isinstance(sidecar, dict) or "task" not in sidecar or "labels" not in sidecar:
        raise UnreadableFileError("labels sidecar must carry 'task' and 'labels'")
    task = Task.from_string(sidecar["task"])
    label_map = sidecar["labels"]
    ids, rows, labels = [], [], []
    missing = []
    for key, vec in store.sorted_items():
        if key not in label_map:
            missing.append(key)
            continue
        try:
            class_index = task.to_class_index(int(label_map[key]))
        except ValueError as exc:
            raise LabelOutOfRangeError(str(exc)) from None
        ids.append(key)
        rows.append(vec)
        labels.append(class_index)
    if missing:
        raise MissingKeyError(missing)
    features = (
        np.stack(rows) if rows else np.empty((0, FUSED_DIM), dtype=np.float32)
    )
    return FeatureMatrix(
        record_ids=ids,
        features=features,
        labels=np.asarray(labels, dtype=np.int64),
        task=task,
    )
