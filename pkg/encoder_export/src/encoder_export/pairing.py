"""Sentence-pair encoding: CLS + A + SEP + B + SEP with B-first truncation."""

from __future__ import annotations

from typing import NamedTuple, Sequence

import torch

from .errors import EmptySentenceError, TruncationError

_SPECIAL_TOKENS = 3  # one CLS, two SEP


class PairEncoding(NamedTuple):
    input_ids: list[int]
    token_type_ids: list[int]
    attention_mask: list[int]


def build_pair_input(
    tokenizer, sentence_a: str, sentence_b: str, max_length: int | None = None
) -> PairEncoding:
    """Encode a sentence pair the way the encoder expects.

    Segment ids mark A (0) and B (1). When the pair exceeds
    ``max_length`` (default: the tokenizer's own limit) B is cut first,
    down to a single token, before A loses anything.
    """
    if not sentence_a.strip():
        raise EmptySentenceError("sentence_a is empty after trimming")
    if not sentence_b.strip():
        raise EmptySentenceError("sentence_b is empty after trimming")
    limit = tokenizer.model_max_length if max_length is None else int(max_length)
    if limit < _SPECIAL_TOKENS + 2:
        raise TruncationError(f"max length {limit} cannot hold a minimal pair")

    ids_a = tokenizer(sentence_a, add_special_tokens=False)["input_ids"]
    ids_b = tokenizer(sentence_b, add_special_tokens=False)["input_ids"]
    budget = limit - _SPECIAL_TOKENS
    if len(ids_a) + len(ids_b) > budget:
        keep_b = max(1, budget - len(ids_a))
        ids_b = ids_b[:keep_b]
        ids_a = ids_a[:budget - keep_b]

    cls_id, sep_id = tokenizer.cls_token_id, tokenizer.sep_token_id
    input_ids = [cls_id, *ids_a, sep_id, *ids_b, sep_id]
    token_type_ids = [0] * (len(ids_a) + 2) + [1] * (len(ids_b) + 1)
    return PairEncoding(input_ids, token_type_ids, [1] * len(input_ids))


def collate(encodings: Sequence[PairEncoding], pad_id: int) -> dict[str, torch.Tensor]:
    """Right-pad a batch to its longest member; padding gets mask 0."""
    width = max(len(e.input_ids) for e in encodings)
    batch = {
        "input_ids": torch.full((len(encodings), width), pad_id, dtype=torch.long),
        "token_type_ids": torch.zeros((len(encodings), width), dtype=torch.long),
        "attention_mask": torch.zeros((len(encodings), width), dtype=torch.long),
    }
    for i, enc in enumerate(encodings):
        n = len(enc.input_ids)
        batch["input_ids"][i, :n] = torch.tensor(enc.input_ids)
        batch["token_type_ids"][i, :n] = torch.tensor(enc.token_type_ids)
        batch["attention_mask"][i, :n] = torch.tensor(enc.attention_mask)
    return batch
