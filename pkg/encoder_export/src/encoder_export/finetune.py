"""Sequence-classification fine-tuning of the encoder, one run per spec."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
import torch

from .corpus import TrainRow
from .errors import ExportError
from .pairing import build_pair_input, collate
from .specs import NUM_CLASSES, FinetuneSpec

LOGGER = logging.getLogger("encoder_export")


def load_classifier(spec: FinetuneSpec):
    """Pretrained encoder plus a fresh linear head over the task classes."""
    from transformers import AutoModelForSequenceClassification

    torch.manual_seed(spec.seed)  # head init draws from the global generator
    return AutoModelForSequenceClassification.from_pretrained(
        spec.encoder, num_labels=NUM_CLASSES
    )


def finetune(spec: FinetuneSpec, rows: Sequence[TrainRow], tokenizer, model=None):
    """Train for exactly ``spec.epochs`` epochs; returns the model.

    Data order is reshuffled per epoch from a seeded generator, so the
    run is reproducible in a fixed environment. One mean-loss log line
    per epoch.
    """
    if not rows:
        raise ExportError("no training rows for this pairing/task")
    if model is None:
        model = load_classifier(spec)

    encodings = [build_pair_input(tokenizer, r.sentence_a, r.sentence_b,
                                  spec.max_length) for r in rows]
    labels = torch.tensor([r.label for r in rows], dtype=torch.long)

    optimizer = torch.optim.Adam(model.parameters(), lr=spec.learning_rate)
    rng = np.random.default_rng(spec.seed)
    model.train()
    for epoch in range(spec.epochs):
        order = rng.permutation(len(rows))
        total = 0.0
        for start in range(0, len(rows), spec.batch_size):
            picks = order[start:start + spec.batch_size]
            batch = collate([encodings[i] for i in picks], tokenizer.pad_token_id)
            out = model(**batch, labels=labels[picks])
            loss = out.loss
            if not torch.isfinite(loss):
                raise ExportError(f"non-finite loss at epoch {epoch + 1}, "
                                  f"batch starting at {start}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += float(loss.detach()) * len(picks)
        LOGGER.info("epoch %d/%d mean_loss=%.6f",
                    epoch + 1, spec.epochs, total / len(rows))
    return model
