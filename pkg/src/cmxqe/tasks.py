"""The two prediction sub-tasks and their label conventions.

Both tasks are 10-way classifications. Rating labels live on a 1..10 scale
and are shifted down by one to obtain class indices; disagreement labels
already live on 0..9 and are used as-is.
"""

from __future__ import annotations

import enum

NUM_CLASSES = 10


class Task(enum.Enum):
    RATING = "rating"
    DISAGREEMENT = "disagreement"

    @classmethod
    def from_string(cls, text: str) -> "Task":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown task {text!r}; expected 'rating' or 'disagreement'"
            ) from None

    @property
    def label_offset(self) -> int:
        """Natural label of class index 0."""
        return 1 if self is Task.RATING else 0

    @property
    def default_epochs(self) -> int:
        """Training epochs used when no override is given."""
        return 3 if self is Task.RATING else 10

    @property
    def label_range(self) -> tuple[int, int]:
        lo = self.label_offset
        return lo, lo + NUM_CLASSES - 1

    def to_class_index(self, label: int) -> int:
        lo, hi = self.label_range
        if not lo <= label <= hi:
            raise ValueError(f"{self.value} label {label} outside [{lo}, {hi}]")
        return label - self.label_offset

    def to_label(self, class_index: int) -> int:
        if not 0 <= class_index < NUM_CLASSES:
            raise ValueError(f"class index {class_index} outside [0, {NUM_CLASSES})")
        return class_index + self.label_offset
