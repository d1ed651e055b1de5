"""Shared fixtures: a small corpus and a locally built miniature encoder.

The encoder is a real BERT (768 hidden units, one layer) with a vocab
derived from the corpus texts, constructed on the fly so tests never
touch the network. Hidden size stays 768 because that is the exported
vector width the downstream pipeline expects.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest
import torch

PAIRS = [
    ("t1", "Where are you going today?", "तुम आज कहाँ जा रहे हो?",
     ["tum aaj kahan ja rahe ho?", "aaj kahan ja rahe ho tum?"]),
    ("t2", "I really like this movie.", "मुझे यह फिल्म बहुत पसंद है।",
     ["mujhe yeh movie bahut pasand hai.", "yeh film mujhe bahut pasand hai."]),
    ("t3", "The weather is nice here.", "यहाँ मौसम अच्छा है।",
     ["yahan ka mausam accha hai.", "mausam yahan bahut accha hai."]),
]

CANDIDATES = [
    ("a1", "t1", "WAC", "tum aaj kahan ja rahe ho?", 9, 8),
    ("a2", "t1", "PAC", "you aaj kahan going ho?", 3, 5),
    ("a3", "t2", "WAC", "mujhe yeh movie bahut pasand hai.", 7, 7),
    ("a4", "t3", "PAC", "weather yahan accha hai.", 2, 1),
]

HEADER = ["pair_id", "english", "hindi", "human_hinglish", "record_id",
          "generator", "synthetic_hinglish", "rating1", "rating2",
          "average_rating", "disagreement"]


def corpus_rows():
    """CSV rows in the shared layout; pair columns only on first sighting."""
    rows = []
    seen = set()
    for rid, pid, gen, text, r1, r2 in CANDIDATES:
        pair = next(p for p in PAIRS if p[0] == pid)
        if pid in seen:
            head = [pid, "", "", ""]
        else:
            head = [pid, pair[1], pair[2], json.dumps(pair[3])]
            seen.add(pid)
        rows.append(head + [rid, gen, text, r1, r2, "", ""])
    return rows


def write_corpus_csv(path: Path) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        writer.writerows(corpus_rows())
    return path


@pytest.fixture(scope="session")
def corpus_csv(tmp_path_factory) -> Path:
    return write_corpus_csv(tmp_path_factory.mktemp("data") / "corpus.csv")


# ---------------------------------------------------------------------------
# miniature encoder


def _basic_tokens(text: str) -> list[str]:
    """Whitespace split, punctuation separated — mirrors the pretokenizer."""
    out = []
    for chunk in text.split():
        word = ""
        for ch in chunk:
            if ch.isalnum() or ch == "'":
                word += ch
            else:
                if word:
                    out.append(word)
                    word = ""
                out.append(ch)
        if word:
            out.append(word)
    return out


def build_tiny_encoder(directory: Path) -> Path:
    from transformers import BertConfig, BertModel, BertTokenizer

    ordered = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    seen = set(ordered)
    texts = []
    for _, english, hindi, refs in PAIRS:
        texts += [english, hindi, *refs]
    texts += [c[3] for c in CANDIDATES]
    for text in texts:
        for token in _basic_tokens(text):
            if token not in seen:
                seen.add(token)
                ordered.append(token)

    vocab_path = directory / "vocab.txt"
    vocab_path.write_text("\n".join(ordered) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(vocab=str(vocab_path), do_lower_case=False,
                              model_max_length=64)

    torch.manual_seed(1234)
    config = BertConfig(vocab_size=len(ordered), hidden_size=768,
                        num_hidden_layers=1, num_attention_heads=4,
                        intermediate_size=128, max_position_embeddings=64)
    BertModel(config).save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def encoder_dir(tmp_path_factory) -> Path:
    return build_tiny_encoder(tmp_path_factory.mktemp("encoder"))


@pytest.fixture(scope="session")
def tokenizer(encoder_dir):
    from transformers import AutoTokenizer

    return AutoTokenizer.from_pretrained(encoder_dir)
