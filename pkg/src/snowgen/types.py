"""Core data model: documents, spans, answer candidates, QA examples, datasets.

Offsets everywhere count Unicode scalar values (Python string indices), never
bytes and never grapheme clusters, so spans are deterministic across platforms
and correct for CJK text. Spans are half-open: a span covers text[start:end].
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from .errors import DuplicateKey, EmptySpan, OutOfBounds


@dataclass(frozen=True, slots=True)
class Document:
    """One unit of unlabeled corpus: an opaque id plus the document body."""

    id: str
    text: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")
        if len(self.text) < 1:
            raise ValueError(f"document {self.id!r} has empty text")


@dataclass(frozen=True, slots=True)
class Span:
    """Half-open character interval [start, end) into some document."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0:
            raise EmptySpan(f"span start must be >= 0, got {self.start}")
        if self.start >= self.end:
            raise EmptySpan(f"span [{self.start}, {self.end}) covers no characters")

    def __len__(self) -> int:
        return self.end - self.start


@dataclass(frozen=True, slots=True)
class AnswerCandidate:
    """A span plus a cache of the document text it covers.

    Construct via make_candidate, which checks the text/span correspondence.
    """

    span: Span
    text: str


def make_candidate(doc: Document, span: Span) -> AnswerCandidate:
    """Build an AnswerCandidate for doc, validating bounds and caching text."""
    if span.end > len(doc.text):
        raise OutOfBounds(
            f"span [{span.start}, {span.end}) exceeds document {doc.id!r} "
            f"of length {len(doc.text)}"
        )
    return AnswerCandidate(span=span, text=doc.text[span.start : span.end])


class Provenance(Enum):
    """How a QA example entered the dataset."""

    EXACT_MATCH = "exact_match"
    COMBINED = "combined"
    SEED_IMPORT = "seed_import"


@dataclass(frozen=True, slots=True)
class QAExample:
    """A generated (document, question, answer) triple with bookkeeping."""

    document_id: str
    question: str
    answer: AnswerCandidate
    provenance: Provenance
    iteration: int

    def __post_init__(self) -> None:
        if not self.question:
            raise ValueError("question must be non-empty")
        if self.iteration < 0:
            raise ValueError(f"iteration must be >= 0, got {self.iteration}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.document_id, self.question)


class DuplicatePolicy(Enum):
    """What Dataset.add does when the (document_id, question) key repeats."""

    REJECT = "reject"
    LAST_WRITE_WINS = "last_write_wins"


class Dataset:
    """Ordered collection of QAExamples keyed on (document_id, question).

    Insertion order is preserved for reproducible serialization. The dataset
    also carries the text of every referenced document (needed to serialize
    SQuAD-style files and to check answer grounding); contexts are recorded
    when examples are added with their document available.
    """

    def __init__(self, duplicate_policy: DuplicatePolicy = DuplicatePolicy.REJECT) -> None:
        self._by_key: dict[tuple[str, str], QAExample] = {}
        self._contexts: dict[str, str] = {}
        self.duplicate_policy = duplicate_policy

    @classmethod
    def from_examples(
        cls,
        examples: Iterable[QAExample],
        *,
        contexts: dict[str, str] | None = None,
        duplicate_policy: DuplicatePolicy = DuplicatePolicy.REJECT,
    ) -> "Dataset":
        ds = cls(duplicate_policy)
        if contexts:
            ds._contexts.update(contexts)
        for ex in examples:
            ds.add(ex)
        return ds

    def add(self, example: QAExample, *, context: str | None = None) -> None:
        """Insert one example; behavior on duplicate keys follows the policy.

        When context (the referenced document's text) is supplied, the answer
        is checked against it: the cached text must equal the substring at the
        answer span (MRC grounding).
        """
        if context is not None:
            covered = context[example.answer.span.start : example.answer.span.end]
            if covered != example.answer.text:
                raise ValueError(
                    f"answer {example.answer.text!r} is not the text at "
                    f"[{example.answer.span.start}, {example.answer.span.end}) "
                    f"of document {example.document_id!r}"
                )
            known = self._contexts.get(example.document_id)
            if known is not None and known != context:
                raise ValueError(
                    f"conflicting texts recorded for document {example.document_id!r}"
                )
            self._contexts[example.document_id] = context
        key = example.key
        if key in self._by_key and self.duplicate_policy is DuplicatePolicy.REJECT:
            raise DuplicateKey(f"duplicate (document_id, question) key: {key!r}")
        self._by_key[key] = example

    def record_context(self, document_id: str, text: str) -> None:
        self._contexts[document_id] = text

    def context_for(self, document_id: str) -> str | None:
        return self._contexts.get(document_id)

    @property
    def contexts(self) -> dict[str, str]:
        return dict(self._contexts)

    @property
    def examples(self) -> list[QAExample]:
        return list(self._by_key.values())

    def get(self, key: tuple[str, str]) -> QAExample | None:
        return self._by_key.get(key)

    def keys(self) -> Iterator[tuple[str, str]]:
        return iter(self._by_key.keys())

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._by_key

    def __iter__(self) -> Iterator[QAExample]:
        return iter(self._by_key.values())

    def __len__(self) -> int:
        return len(self._by_key)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.examples == other.examples

    def __repr__(self) -> str:
        return f"Dataset({len(self)} examples)"

    def copy(self, duplicate_policy: DuplicatePolicy | None = None) -> "Dataset":
        ds = Dataset(duplicate_policy or self.duplicate_policy)
        ds._by_key = dict(self._by_key)
        ds._contexts = dict(self._contexts)
        return ds
