"""Run descriptors: which pairing, which task, which encoder, how long."""

from __future__ import annotations

import enum
from dataclasses import dataclass

DEFAULT_ENCODER = "bert-base-multilingual-cased"
NUM_CLASSES = 10


class Pairing(enum.Enum):
    """The four (text source, context language) combinations.

    Sentence A carries the context (the English or Hindi original),
    sentence B the Hinglish text — a synthetic candidate for the SYN
    pairings, a human reference for the HUM ones.
    """

    SYN_EN = "syn-en"
    SYN_HI = "syn-hi"
    HUM_EN = "hum-en"
    HUM_HI = "hum-hi"

    @property
    def source(self) -> str:
        return self.value.split("-")[0]

    @property
    def context(self) -> str:
        return self.value.split("-")[1]

    @property
    def output_name(self) -> str:
        """CLSV file name understood by the downstream file provider."""
        return f"{self.source}_{self.context}.clsv"


class TaskName(enum.Enum):
    RATING = "rating"
    DISAGREEMENT = "disagreement"

    def class_of(self, rating_1: int, rating_2: int) -> int:
        """Class index 0..9 for one record's pair of annotator ratings."""
        if self is TaskName.RATING:
            return (rating_1 + rating_2 + 1) // 2 - 1  # half-up mean, 1..10 -> 0..9
        return abs(rating_1 - rating_2)


@dataclass(frozen=True)
class FinetuneSpec:
    """One fine-tuning run; eight valid (pairing, task) combinations."""

    pairing: Pairing
    task: TaskName
    encoder: str = DEFAULT_ENCODER
    learning_rate: float = 1e-6
    epochs: int = 5
    batch_size: int = 8
    seed: int = 42
    max_length: int | None = None  # None -> the tokenizer's own limit

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
