"""CLS-vector extraction from the encoder's last hidden layer."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch

from .corpus import ExportRow
from .pairing import build_pair_input, collate


def _encoder_of(model):
    # works for both a bare encoder and one wrapped in a classification head
    return getattr(model, "base_model", model)


def extract_cls(
    model,
    tokenizer,
    rows: Sequence[ExportRow],
    batch_size: int = 8,
    max_length: int | None = None,
) -> tuple[list[str], np.ndarray]:
    """Position-0 final-layer states, one float32 vector per row.

    Runs in eval mode without gradients, so repeated calls on the same
    weights produce identical vectors.
    """
    encoder = _encoder_of(model)
    encoder.eval()
    keys = [r.key for r in rows]
    chunks: list[np.ndarray] = []
    with torch.no_grad():
        for start in range(0, len(rows), batch_size):
            part = rows[start:start + batch_size]
            encodings = [build_pair_input(tokenizer, r.sentence_a, r.sentence_b,
                                          max_length) for r in part]
            batch = collate(encodings, tokenizer.pad_token_id)
            out = encoder(**batch)
            chunks.append(out.last_hidden_state[:, 0, :].to(torch.float32).numpy())
    dim = int(encoder.config.hidden_size)
    if not chunks:
        return keys, np.empty((0, dim), dtype=np.float32)
    return keys, np.concatenate(chunks, axis=0)
