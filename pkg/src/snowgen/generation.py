"""Question generation stage: answer-tag insertion and the generator contract.

Tags are inserted with no added whitespace around the answer span, so
stripping both tags from the tagged text recovers the document exactly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from .errors import BackendFailure, TagCollision
from .types import AnswerCandidate, Dataset, Document

logger = logging.getLogger(__name__)

DEFAULT_OPEN_TAG = "<ANS>"
DEFAULT_CLOSE_TAG = "</ANS>"


@dataclass(frozen=True, slots=True)
class TagConfig:
    """Markers placed before and after the answer span in the tagged text."""

    open_tag: str = DEFAULT_OPEN_TAG
    close_tag: str = DEFAULT_CLOSE_TAG

    def __post_init__(self) -> None:
        if not self.open_tag or not self.close_tag:
            raise ValueError("tags must be non-empty")
        if self.open_tag == self.close_tag:
            raise ValueError("open and close tags must differ")


@runtime_checkable
class GeneratorBackend(Protocol):
    """Pluggable question generator over answer-tagged document text.

    generate must be deterministic given fixed backend state; an empty string
    means the backend declined. Concurrency contract matches ExtractorBackend.
    """

    concurrent_safe: bool

    def generate(self, tagged_text: str) -> str: ...

    def fit(self, seed: Dataset) -> None: ...


def insert_tags(doc: Document, answer: AnswerCandidate, cfg: TagConfig = TagConfig()) -> str:
    """Splice the answer tags around the answer span of the document text.

    Raises TagCollision when either tag already occurs in the document, since
    the tagged text would then be ambiguous to the generator.
    """
    for tag in (cfg.open_tag, cfg.close_tag):
        if tag in doc.text:
            raise TagCollision(f"tag {tag!r} occurs in document {doc.id!r}")
    span = answer.span
    return (
        doc.text[: span.start]
        + cfg.open_tag
        + doc.text[span.start : span.end]
        + cfg.close_tag
        + doc.text[span.end :]
    )


def generate_questions(
    doc: Document,
    candidates: list[AnswerCandidate],
    backend: GeneratorBackend,
    cfg: TagConfig = TagConfig(),
) -> list[tuple[AnswerCandidate, str]]:
    """Generate one question per candidate, keeping candidate order.

    Pairs whose question comes back empty are dropped with a warning, so the
    output length is at most the input length.
    """
    pairs: list[tuple[AnswerCandidate, str]] = []
    for index, candidate in enumerate(candidates):
        tagged = insert_tags(doc, candidate, cfg)
        try:
            question = backend.generate(tagged)
        except Exception as exc:
            raise BackendFailure(
                f"generator failed on document {doc.id!r}, candidate {index}: {exc}"
            ) from exc
        if not question:
            logger.warning(
                "generator declined candidate %d (%r) of document %r",
                index,
                candidate.text,
                doc.id,
            )
            continue
        pairs.append((candidate, question))
    return pairs


class TemplateGenerator:
    """Deterministic template generator for tests and offline runs.

    Emits "What is <answer>?" truncated to 64 characters, recovering the
    answer from between the tags. Stands in for a learned generator; fit is a
    no-op.
    """

    concurrent_safe = True

    def __init__(self, cfg: TagConfig = TagConfig(), max_length: int = 64) -> None:
        self.cfg = cfg
        self.max_length = max_length

    def generate(self, tagged_text: str) -> str:
        open_at = tagged_text.find(self.cfg.open_tag)
        close_at = tagged_text.find(self.cfg.close_tag, open_at + len(self.cfg.open_tag))
        if open_at < 0 or close_at < 0:
            return ""
        answer = tagged_text[open_at + len(self.cfg.open_tag) : close_at]
        return f"What is {answer}?"[: self.max_length]

    def fit(self, seed: Dataset) -> None:
        pass
