"""Exception hierarchy shared across the pipeline.

Every error raised by this package derives from :class:`PipelineError` so
callers (notably the CLI) can map failures to exit codes without matching
on message text.
"""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class OutOfRangeError(PipelineError):
    """A rating or label lies outside its documented range."""


class UnreadableFileError(PipelineError):
    """An input file is missing, unreadable, or structurally unusable."""


class EmptyInputError(PipelineError):
    """An operation received an empty collection it cannot act on."""


class EmptyDatasetError(PipelineError):
    """Training was requested on a dataset with zero rows."""


class EmptySentenceError(PipelineError):
    """A sentence that must be non-empty is blank after trimming."""


class DimMismatchError(PipelineError):
    """A vector or matrix does not have the expected dimensionality."""

    def __init__(self, expected: int, found: int, where: str = ""):
        self.expected = expected
        self.found = found
        suffix = f" in {where}" if where else ""
        super().__init__(f"expected dim {expected}, found {found}{suffix}")


class ShapeMismatchError(PipelineError):
    """Array shapes are inconsistent with each other."""


class LengthMismatchError(PipelineError):
    """Two aligned sequences differ in length."""


class LabelOutOfRangeError(PipelineError):
    """A class label lies outside the configured label range."""


class MissingKeyError(PipelineError):
    """One or more requested embedding keys are absent from a store."""

    def __init__(self, keys):
        self.keys = sorted(keys)
        shown = ", ".join(self.keys[:10])
        more = f" (+{len(self.keys) - 10} more)" if len(self.keys) > 10 else ""
        super().__init__(f"{len(self.keys)} missing key(s): {shown}{more}")


class NoHumanVectorsError(PipelineError):
    """No human reference vectors exist for a (pair, context) combination."""


class FormatError(PipelineError):
    """A binary or line-oriented container violates its documented layout."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class VersionMismatchError(FormatError):
    """File declares an unsupported format version."""


class TruncatedFileError(FormatError):
    """File ended before the declared contents were read."""


class DuplicateKeyError(FormatError):
    """The same key appears more than once where uniqueness is required."""


class MalformedLineError(FormatError):
    """A line in a JSONL file cannot be decoded into a record."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason}")


class ArchitectureMismatchError(FormatError):
    """A checkpoint's layer dimensions do not match the fixed architecture."""


class NonFiniteInputError(PipelineError):
    """An input array contains NaN or infinite entries."""


class NonFiniteLossError(PipelineError):
    """Training produced a NaN or infinite loss."""


class StaleCacheError(PipelineError):
    """A backward pass was given a cache from a different forward call."""


class DegenerateDistributionError(PipelineError):
    """Cohen's kappa is undefined because expected agreement equals 1."""
