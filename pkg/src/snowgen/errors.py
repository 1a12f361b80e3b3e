"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class SnowgenError(Exception):
    """Base class for all errors raised by this package."""


class EmptySpan(SnowgenError, ValueError):
    """Span has start >= end (covers no characters)."""


class OutOfBounds(SnowgenError, ValueError):
    """Span exceeds the bounds of the document it annotates."""


class LengthMismatch(SnowgenError, ValueError):
    """Label sequence length differs from the document length."""


class NotCombinable(SnowgenError, ValueError):
    """Spans are disjoint; a covering interval would bridge unrelated text."""


class TagCollision(SnowgenError, ValueError):
    """An answer tag already occurs literally in the document text."""


class BackendFailure(SnowgenError):
    """A model backend failed during label/generate/answer/fit."""


class ProtocolError(SnowgenError):
    """A remote backend violated the wire protocol (never retried)."""


class ParseError(SnowgenError, ValueError):
    """Input file could not be parsed."""

    def __init__(self, message: str, *, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateId(SnowgenError, ValueError):
    """Duplicate document id within one corpus file."""


class DuplicateKey(SnowgenError, ValueError):
    """Duplicate (document_id, question) key inserted into a dataset."""


class EmptyCorpus(SnowgenError, ValueError):
    """Corpus contains no documents."""


class InvalidSeed(SnowgenError, ValueError):
    """Seed dataset is empty or otherwise unusable."""


class NotEnoughPairs(SnowgenError, ValueError):
    """Fewer eligible review pairs than requested."""

    def __init__(self, requested: int, available: int) -> None:
        super().__init__(
            f"requested {requested} review pairs but only {available} are eligible"
        )
        self.requested = requested
        self.available = available


class CheckpointError(SnowgenError):
    """Checkpoint directory is inconsistent with the requested run."""
