"""Exception types for the export pipeline."""


class ExportError(Exception):
    """Base class for everything raised deliberately by this package."""


class EmptySentenceError(ExportError):
    """A pair member is empty after trimming; the encoder needs both sides."""


class CorpusError(ExportError):
    """The dataset file is missing, unreadable, or structurally broken."""


class TruncationError(ExportError):
    """The requested maximum length cannot hold even a minimal pair."""
