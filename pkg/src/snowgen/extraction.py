"""Answer extraction stage: per-character labeling, run merging, post-processing.

The unit of labeling is the Unicode scalar value, not a model tokenizer's
token; backends that label model tokens must project their labels onto
character positions before returning.
"""

from __future__ import annotations

import re
from typing import Callable, Protocol, Sequence, runtime_checkable

from .errors import BackendFailure, LengthMismatch
from .types import AnswerCandidate, Dataset, Document, Span, make_candidate

# One boolean per Unicode scalar value of the document text.
LabelSequence = Sequence[bool]

PostProcessor = Callable[[Document, "list[AnswerCandidate]"], "list[AnswerCandidate]"]


@runtime_checkable
class ExtractorBackend(Protocol):
    """Pluggable answer extractor: per-character labels plus a fit hook.

    label must be deterministic given fixed backend state. Backends unsafe for
    concurrent label calls declare concurrent_safe = False and get serialized
    by the orchestrator. fit is exclusive: no label calls are in flight.
    """

    concurrent_safe: bool

    def label(self, doc: Document) -> LabelSequence: ...

    def fit(self, seed: Dataset) -> None: ...


def merge_runs(doc: Document, labels: LabelSequence) -> list[AnswerCandidate]:
    """Merge maximal runs of true labels into answer candidates.

    Returns one candidate per maximal run, in document order; candidates are
    pairwise disjoint. Raises LengthMismatch when labels do not line up with
    the document text.
    """
    if len(labels) != len(doc.text):
        raise LengthMismatch(
            f"document {doc.id!r} has {len(doc.text)} characters "
            f"but {len(labels)} labels"
        )
    candidates: list[AnswerCandidate] = []
    start: int | None = None
    for i, flag in enumerate(labels):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            candidates.append(make_candidate(doc, Span(start, i)))
            start = None
    if start is not None:
        candidates.append(make_candidate(doc, Span(start, len(labels))))
    return candidates


# Paired punctuation trimmed from candidate edges when the mate is missing.
_OPEN_TO_CLOSE = {
    "(": ")",
    "[": "]",
    "{": "}",
    "（": "）",
    "《": "》",
    "「": "」",
    "『": "』",
    "【": "】",
    "“": "”",
    "‘": "’",
}
_CLOSE_TO_OPEN = {v: k for k, v in _OPEN_TO_CLOSE.items()}
_SYMMETRIC_QUOTES = {'"', "'"}


def _trimmed_bounds(text: str, start: int, end: int) -> tuple[int, int]:
    """Shrink [start, end) by whitespace and unbalanced paired punctuation."""
    while start < end:
        segment = text[start:end]
        first, last = segment[0], segment[-1]
        if first.isspace():
            start += 1
            continue
        if last.isspace():
            end -= 1
            continue
        if first in _OPEN_TO_CLOSE and _OPEN_TO_CLOSE[first] not in segment[1:]:
            start += 1
            continue
        if last in _CLOSE_TO_OPEN and _CLOSE_TO_OPEN[last] not in segment[:-1]:
            end -= 1
            continue
        if first in _SYMMETRIC_QUOTES and first not in segment[1:]:
            start += 1
            continue
        if last in _SYMMETRIC_QUOTES and last not in segment[:-1]:
            end -= 1
            continue
        break
    return start, end


def post_process(doc: Document, candidates: list[AnswerCandidate]) -> list[AnswerCandidate]:
    """Default post-processor: trim candidate edges, drop emptied candidates.

    Trims leading/trailing whitespace and unbalanced leading/trailing paired
    punctuation (brackets and quotes whose mate is absent from the candidate).
    Never extends a span; idempotent.
    """
    trimmed: list[AnswerCandidate] = []
    for cand in candidates:
        start, end = _trimmed_bounds(doc.text, cand.span.start, cand.span.end)
        if start >= end:
            continue
        if (start, end) == (cand.span.start, cand.span.end):
            trimmed.append(cand)
        else:
            trimmed.append(make_candidate(doc, Span(start, end)))
    return trimmed


def extract(
    doc: Document,
    backend: ExtractorBackend,
    post: PostProcessor = post_process,
) -> list[AnswerCandidate]:
    """Run the extractor backend on one document and post-process the runs."""
    try:
        labels = backend.label(doc)
    except Exception as exc:
        raise BackendFailure(f"extractor failed on document {doc.id!r}: {exc}") from exc
    return post(doc, merge_runs(doc, labels))


def cap_candidates(candidates: list[AnswerCandidate], limit: int) -> list[AnswerCandidate]:
    """Keep at most limit candidates, preferring the longest, in document order."""
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    if len(candidates) <= limit:
        return list(candidates)
    ranked = sorted(
        range(len(candidates)),
        key=lambda i: (-len(candidates[i].span), candidates[i].span.start),
    )
    return [candidates[i] for i in sorted(ranked[:limit])]


_CAPITALIZED_RUN = re.compile(r"[A-Z][A-Za-z0-9]*(?: [A-Z][A-Za-z0-9]*)*")
_NUMERIC_RUN = re.compile(r"[0-9][0-9%.\-]*")


class HeuristicExtractor:
    """Deterministic rule-based extractor for tests and offline runs.

    Labels true every maximal run of characters forming (a) a capitalized word
    sequence (each word starts uppercase) or (b) a digit run with attached
    %, ., - characters. Stands in for a learned sequence labeler; fit is a
    no-op.
    """

    concurrent_safe = True

    def label(self, doc: Document) -> list[bool]:
        labels = [False] * len(doc.text)
        for pattern in (_CAPITALIZED_RUN, _NUMERIC_RUN):
            for match in pattern.finditer(doc.text):
                for i in range(match.start(), match.end()):
                    labels[i] = True
        return labels

    def fit(self, seed: Dataset) -> None:
        pass
