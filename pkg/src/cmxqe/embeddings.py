"""Keyed 768-dim sentence vectors: data model, file formats, and providers.

Vectors travel between pipeline stages in the CLSV container, a little-endian
framed binary:

    magic ``CLSV`` (4 bytes) | format version u32 = 1 | dim u32 |
    record count u64 | per record: key length u16 | key UTF-8 | dim x f32

Records are sorted by key so identical stores serialize to identical bytes.
A JSONL format (one ``{"key": ..., "values": [...]}`` object per line) exists
for debugging and interop; CLSV is authoritative.

Keys for encoder output follow a fixed scheme naming the sentence pairing
that produced the vector:

    syn:{record_id}:{en|hi}            synthetic sentence vs. English/Hindi
    hum:{pair_id}:{index}:{en|hi}      human reference vs. English/Hindi

The deterministic pseudo-embedder makes the whole pipeline testable without
any neural encoder: token-hash expansion, seeded, unit-norm output.
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .dataset import SentencePairRecord, SyntheticRecord
from .errors import (
    BadMagicError,
    DimMismatchError,
    DuplicateKeyError,
    EmptySentenceError,
    FormatError,
    MalformedLineError,
    MissingKeyError,
    NonFiniteInputError,
    TruncatedFileError,
    UnreadableFileError,
    VersionMismatchError,
)

log = logging.getLogger(__name__)

DIM = 768
CLSV_MAGIC = b"CLSV"
CLSV_VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_KEYLEN = struct.Struct("<H")

SOURCES = ("syn", "hum")
CONTEXTS = ("en", "hi")


@dataclass(frozen=True)
class EmbeddingKey:
    """Structured form of the key scheme; ``human_index`` only for ``hum``."""

    source: str
    owner_id: str
    context: str
    human_index: int | None = None

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.context not in CONTEXTS:
            raise ValueError(f"context must be one of {CONTEXTS}, got {self.context!r}")
        if (self.human_index is not None) != (self.source == "hum"):
            raise ValueError("human_index is required iff source is 'hum'")
        if self.human_index is not None and self.human_index < 0:
            raise ValueError("human_index must be non-negative")
        if ":" in self.owner_id:
            raise ValueError("owner_id must not contain ':'")

    def render(self) -> str:
        if self.source == "syn":
            return f"syn:{self.owner_id}:{self.context}"
        return f"hum:{self.owner_id}:{self.human_index}:{self.context}"

    @classmethod
    def parse(cls, text: str) -> "EmbeddingKey":
        parts = text.split(":")
        if len(parts) == 3 and parts[0] == "syn":
            return cls(source="syn", owner_id=parts[1], context=parts[2])
        if len(parts) == 4 and parts[0] == "hum":
            try:
                index = int(parts[2])
            except ValueError:
                raise ValueError(f"bad human_index in key {text!r}") from None
            return cls(source="hum", owner_id=parts[1], context=parts[3],
                       human_index=index)
        raise ValueError(f"key {text!r} does not match the key scheme")


class EmbeddingStore:
    """Unique string keys mapped to fixed-dimension float32 vectors."""

    def __init__(self, dim: int = DIM):
        if dim <= 0:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = int(dim)
        self._entries: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str | EmbeddingKey) -> bool:
        return self._render(key) in self._entries

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingStore):
            return NotImplemented
        if self.dim != other.dim or set(self._entries) != set(other._entries):
            return False
        return all(
            np.array_equal(vec, other._entries[key])
            for key, vec in self._entries.items()
        )

    @staticmethod
    def _render(key: str | EmbeddingKey) -> str:
        return key.render() if isinstance(key, EmbeddingKey) else key

    def add(self, key: str | EmbeddingKey, values) -> None:
        name = self._render(key)
        if name in self._entries:
            raise DuplicateKeyError(f"key {name!r} already present")
        if len(name.encode("utf-8")) > 0xFFFF:
            raise ValueError("key too long to serialize (max 65535 UTF-8 bytes)")
        vec = np.asarray(values, dtype=np.float32)
        if vec.shape != (self.dim,):
            raise DimMismatchError(self.dim, int(vec.size), where=f"key {name!r}")
        if not np.all(np.isfinite(vec)):
            raise NonFiniteInputError(f"vector for key {name!r} has non-finite values")
        vec = vec.copy()
        vec.flags.writeable = False
        self._entries[name] = vec

    def get(self, key: str | EmbeddingKey) -> np.ndarray:
        name = self._render(key)
        try:
            return self._entries[name]
        except KeyError:
            raise MissingKeyError([name]) from None

    def keys(self) -> list[str]:
        return list(self._entries)

    def sorted_items(self) -> list[tuple[str, np.ndarray]]:
        return sorted(self._entries.items(), key=lambda item: item[0])

    @classmethod
    def merge(cls, *stores: "EmbeddingStore") -> "EmbeddingStore":
        if not stores:
            raise ValueError("merge needs at least one store")
        merged = cls(dim=stores[0].dim)
        for store in stores:
            if store.dim != merged.dim:
                raise DimMismatchError(merged.dim, store.dim, where="merge")
            for key, vec in store._entries.items():
                merged.add(key, vec)
        return merged


def write_clsv(store: EmbeddingStore, path: str | Path) -> None:
    """Serialize a store; output bytes depend only on the store contents."""
    path = Path(path)
    items = store.sorted_items()
    with path.open("wb") as handle:
        handle.write(_HEADER.pack(CLSV_MAGIC, CLSV_VERSION, store.dim, len(items)))
        for key, vec in items:
            encoded = key.encode("utf-8")
            handle.write(_KEYLEN.pack(len(encoded)))
            handle.write(encoded)
            handle.write(vec.astype("<f4", copy=False).tobytes())


def read_clsv(path: str | Path, expected_dim: int | None = None) -> EmbeddingStore:
    """Read a CLSV file back into a store, verifying the framing."""
    path = Path(path)
    try:
        handle = path.open("rb")
    except OSError as exc:
        raise UnreadableFileError(f"cannot read {path}: {exc}") from exc
    with handle:
        header = handle.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TruncatedFileError(f"{path}: header truncated")
        magic, version, dim, count = _HEADER.unpack(header)
        if magic != CLSV_MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        if version != CLSV_VERSION:
            raise VersionMismatchError(
                f"{path}: unsupported version {version} (expected {CLSV_VERSION})"
            )
        if dim <= 0:
            raise FormatError(f"{path}: non-positive dim {dim}")
        if expected_dim is not None and dim != expected_dim:
            raise DimMismatchError(expected_dim, dim, where=str(path))
        store = EmbeddingStore(dim=dim)
        vec_bytes = dim * 4
        for _ in range(count):
            raw_len = handle.read(_KEYLEN.size)
            if len(raw_len) < _KEYLEN.size:
                raise TruncatedFileError(f"{path}: record header truncated")
            (key_len,) = _KEYLEN.unpack(raw_len)
            raw_key = handle.read(key_len)
            if len(raw_key) < key_len:
                raise TruncatedFileError(f"{path}: key truncated")
            raw_vec = handle.read(vec_bytes)
            if len(raw_vec) < vec_bytes:
                raise TruncatedFileError(f"{path}: vector truncated")
            key = raw_key.decode("utf-8")
            values = np.frombuffer(raw_vec, dtype="<f4").astype(np.float32)
            if not np.all(np.isfinite(values)):
                raise NonFiniteInputError(f"{path}: non-finite values for {key!r}")
            store.add(key, values)
        if handle.read(1):
            raise FormatError(f"{path}: trailing bytes after final record")
    return store


def write_jsonl(store: EmbeddingStore, path: str | Path) -> None:
    """Debug/interop export; one JSON object per line, sorted by key."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for key, vec in store.sorted_items():
            obj = {"key": key, "values": [float(v) for v in vec]}
            handle.write(json.dumps(obj, ensure_ascii=False))
            handle.write("\n")


def read_jsonl(path: str | Path, expected_dim: int | None = None) -> EmbeddingStore:
    path = Path(path)
    store: EmbeddingStore | None = None
    try:
        handle = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise UnreadableFileError(f"cannot read {path}: {exc}") from exc
    with handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLineError(line_no, f"invalid JSON: {exc.msg}")
            if not isinstance(obj, dict) or "key" not in obj:
                raise MalformedLineError(line_no, "missing 'key'")
            if "values" not in obj:
                raise MalformedLineError(line_no, "missing 'values'")
            key, values = obj["key"], obj["values"]
            if not isinstance(key, str) or not isinstance(values, list):
                raise MalformedLineError(line_no, "'key'/'values' have wrong types")
            if store is None:
                dim = expected_dim if expected_dim is not None else len(values)
                store = EmbeddingStore(dim=dim)
            if len(values) != store.dim:
                raise DimMismatchError(store.dim, len(values), where=f"line {line_no}")
            try:
                vec = np.asarray(values, dtype=np.float32)
            except (TypeError, ValueError):
                raise MalformedLineError(line_no, "'values' must be numbers") from None
            store.add(key, vec)
    if store is None:
        store = EmbeddingStore(dim=expected_dim if expected_dim else DIM)
    return store


# Deterministic pseudo-embedder: FNV-1a token hashing expanded through
# splitmix64 into a fixed-width vector. Pure in (sentence_a, sentence_b, seed).

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _fnv1a(data: bytes, state: int = _FNV_OFFSET) -> int:
    for byte in data:
        state = ((state ^ byte) * _FNV_PRIME) & _MASK64
    return state


def _token_values(token_hash: int, dim: int) -> np.ndarray:
    """Expand one 64-bit hash into ``dim`` floats uniform in [-1, 1)."""
    idx = np.arange(1, dim + 1, dtype=np.uint64)
    z = (np.uint64(token_hash) + idx * np.uint64(_GOLDEN))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-52 - 1.0


def deterministic_embed(
    sentence_a: str, sentence_b: str, seed: int, dim: int = DIM
) -> np.ndarray:
    """Hash-based stand-in for an encoder; unit-norm float32 vector.

    Tokens are lowercased whitespace splits. Each token vector is derived
    from a hash of (seed, which sentence it came from, token text), so
    swapping the two sentences changes the result.
    """
    if not sentence_b.strip():
        raise EmptySentenceError("sentence_b is empty after trimming")
    seed_bytes = struct.pack("<Q", int(seed) & _MASK64)
    total = np.zeros(dim, dtype=np.float64)
    for tag, sentence in ((b"a", sentence_a), (b"b", sentence_b)):
        base = _fnv1a(tag, _fnv1a(seed_bytes))
        for token in sentence.lower().split():
            token_hash = _fnv1a(token.encode("utf-8"), base)
            total += _token_values(token_hash, dim)
    norm = float(np.linalg.norm(total))
    if norm == 0.0:
        raise EmptySentenceError("token vectors cancelled to a zero vector")
    return (total / norm).astype(np.float32)


class EmbedRequest(NamedTuple):
    key: str
    sentence_a: str
    sentence_b: str


class DeterministicProvider:
    """Provider backed by the pseudo-embedder; reproducible per seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def fetch(self, requests: Sequence[EmbedRequest], dim: int = DIM) -> EmbeddingStore:
        store = EmbeddingStore(dim=dim)
        for request in requests:
            store.add(
                request.key,
                deterministic_embed(
                    request.sentence_a, request.sentence_b, self.seed, dim=dim
                ),
            )
        return store


class FileProvider:
    """Provider backed by a CLSV file; all requested keys must be present."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._store: EmbeddingStore | None = None

    def _load(self, dim: int) -> EmbeddingStore:
        if self._store is None:
            self._store = read_clsv(self.path, expected_dim=dim)
        return self._store

    def fetch(self, requests: Sequence[EmbedRequest], dim: int = DIM) -> EmbeddingStore:
        source = self._load(dim)
        missing = [r.key for r in requests if r.key not in source]
        if missing:
            raise MissingKeyError(missing)
        store = EmbeddingStore(dim=dim)
        for request in requests:
            store.add(request.key, source.get(request.key))
        return store


def provide_embeddings(provider, requests: Sequence[EmbedRequest]) -> EmbeddingStore:
    """Obtain exactly one vector per request from the given provider."""
    return provider.fetch(requests)


def build_requests(
    pairs: Sequence[SentencePairRecord],
    synthetic: Sequence[SyntheticRecord],
) -> dict[tuple[str, str], list[EmbedRequest]]:
    """Assemble the four request groups, one per (source, context).

    Synthetic sentences pair with their English and Hindi sources; every
    human reference pairs with both as well. Sentence A carries the
    English/Hindi context, sentence B the Hinglish text.
    """
    pair_index = {p.pair_id: p for p in pairs}
    groups: dict[tuple[str, str], list[EmbedRequest]] = {
        ("syn", "en"): [],
        ("syn", "hi"): [],
        ("hum", "en"): [],
        ("hum", "hi"): [],
    }
    for rec in synthetic:
        pair = pair_index.get(rec.pair_id)
        if pair is None:
            raise MissingKeyError([f"pair {rec.pair_id} for record {rec.record_id}"])
        for context, context_text in (("en", pair.english_text), ("hi", pair.hindi_text)):
            key = EmbeddingKey("syn", rec.record_id, context).render()
            groups[("syn", context)].append(
                EmbedRequest(key, context_text, rec.hinglish_text)
            )
    for pair in pairs:
        for index, reference in enumerate(pair.human_hinglish):
            for context, context_text in (
                ("en", pair.english_text),
                ("hi", pair.hindi_text),
            ):
                key = EmbeddingKey("hum", pair.pair_id, context, index).render()
                groups[("hum", context)].append(
                    EmbedRequest(key, context_text, reference)
                )
    return groups
