"""Data filter stage: independent answering plus span-geometry rules.

For each (document, question) the filter backend produces its own answer
without seeing the candidate. The candidate is then discarded (disjoint),
kept (exact match), or replaced by the minimal covering span (partial
overlap). No score thresholding anywhere: the decision depends only on span
geometry.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Protocol, runtime_checkable

from .errors import BackendFailure
from .spans import OverlapClass, classify, combine
from .types import (
    AnswerCandidate,
    Dataset,
    Document,
    Provenance,
    QAExample,
    Span,
    make_candidate,
)

logger = logging.getLogger(__name__)


@runtime_checkable
class FilterBackend(Protocol):
    """Pluggable filter: answers a question over a document, or abstains.

    The returned candidate, when present, must be a valid span of the
    document. Concurrency contract matches the other backends.
    """

    concurrent_safe: bool

    def answer(self, doc: Document, question: str) -> AnswerCandidate | None: ...

    def fit(self, seed: Dataset) -> None: ...


class DecisionKind(Enum):
    DISCARDED = "discarded"
    KEPT_EXACT = "kept_exact"
    COMBINED = "combined"
    ABSTAINED = "abstained"


@dataclass(frozen=True, slots=True)
class FilterDecision:
    """Outcome of filtering one candidate; COMBINED carries the wider answer."""

    kind: DecisionKind
    new_answer: AnswerCandidate | None = None

    def __post_init__(self) -> None:
        if (self.kind is DecisionKind.COMBINED) != (self.new_answer is not None):
            raise ValueError("new_answer is carried by COMBINED decisions only")


def filter_pair(
    doc: Document,
    candidate: AnswerCandidate,
    question: str,
    backend: FilterBackend,
) -> FilterDecision:
    """Apply the three overlap rules to one candidate/question pair.

    Backend abstention maps to ABSTAINED, which downstream treats as a
    discard (the conservative completion).
    """
    try:
        independent = backend.answer(doc, question)
    except Exception as exc:
        raise BackendFailure(
            f"filter failed on document {doc.id!r}, question {question!r}: {exc}"
        ) from exc
    if independent is None:
        return FilterDecision(DecisionKind.ABSTAINED)
    relation = classify(candidate.span, independent.span)
    if relation is OverlapClass.DISJOINT:
        return FilterDecision(DecisionKind.DISCARDED)
    if relation is OverlapClass.EXACT:
        return FilterDecision(DecisionKind.KEPT_EXACT)
    merged = make_candidate(doc, combine(candidate.span, independent.span))
    return FilterDecision(DecisionKind.COMBINED, merged)


# Bookkeeping key for pairs skipped before filtering (duplicate question for
# the same document; the first pair wins).
DUPLICATE_KEY = "duplicate_key"


def decision_counter() -> dict[str, int]:
    """Fresh zeroed counter over decision variants plus duplicate skips."""
    counts = {kind.value: 0 for kind in DecisionKind}
    counts[DUPLICATE_KEY] = 0
    return counts


def filter_document_detailed(
    doc: Document,
    pairs: list[tuple[AnswerCandidate, str]],
    backend: FilterBackend,
    iteration: int,
) -> tuple[Dataset, dict[str, int]]:
    """Filter every pair of one document, counting each pair's outcome.

    Kept pairs become examples with EXACT_MATCH provenance; combined pairs
    carry the widened answer with COMBINED provenance. Duplicate
    (document, question) keys keep the first pair and are counted under
    DUPLICATE_KEY, so counter values always sum to the number of input pairs.
    """
    result = Dataset()
    counts = decision_counter()
    seen_questions: set[str] = set()
    for candidate, question in pairs:
        if question in seen_questions:
            logger.info(
                "dropping duplicate question %r for document %r", question, doc.id
            )
            counts[DUPLICATE_KEY] += 1
            continue
        seen_questions.add(question)
        decision = filter_pair(doc, candidate, question, backend)
        counts[decision.kind.value] += 1
        if decision.kind is DecisionKind.KEPT_EXACT:
            answer, provenance = candidate, Provenance.EXACT_MATCH
        elif decision.kind is DecisionKind.COMBINED:
            assert decision.new_answer is not None
            answer, provenance = decision.new_answer, Provenance.COMBINED
        else:
            continue
        result.add(
            QAExample(
                document_id=doc.id,
                question=question,
                answer=answer,
                provenance=provenance,
                iteration=iteration,
            ),
            context=doc.text,
        )
    return result, counts


def filter_document(
    doc: Document,
    pairs: list[tuple[AnswerCandidate, str]],
    backend: FilterBackend,
    iteration: int,
) -> Dataset:
    """Filter every pair of one document into a dataset of surviving examples."""
    return filter_document_detailed(doc, pairs, backend, iteration)[0]


def locate_answer(doc: Document, text: str) -> AnswerCandidate | None:
    """Adapter helper: first verbatim occurrence of text as a candidate.

    For backends that produce answer strings rather than spans; returns None
    (abstain) when the text does not occur in the document.
    """
    if not text:
        return None
    at = doc.text.find(text)
    if at < 0:
        return None
    return make_candidate(doc, Span(at, at + len(text)))


class FragmentMatchFilter:
    """Deterministic filter backend for offline smoke tests (non-semantic).

    Answers with the first document occurrence of the longest question
    fragment that appears verbatim in the document, ignoring the candidate;
    abstains when no fragment with visible characters matches. fit is a
    no-op.
    """

    concurrent_safe = True

    def answer(self, doc: Document, question: str) -> AnswerCandidate | None:
        for length in range(len(question), 0, -1):
            for start in range(0, len(question) - length + 1):
                fragment = question[start : start + length]
                if not fragment.strip():
                    continue
                if fragment in doc.text:
                    return locate_answer(doc, fragment)
        return None

    def fit(self, seed: Dataset) -> None:
        pass
