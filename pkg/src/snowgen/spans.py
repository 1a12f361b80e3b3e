"""Interval arithmetic over spans: overlap classification and combination.

Overlap is defined as non-empty character-interval intersection on the same
document. Strict containment counts as Partial, so combining a contained pair
yields the outer span.
"""

from __future__ import annotations

from enum import Enum

from .errors import NotCombinable
from .types import Span


class OverlapClass(Enum):
    """Total, mutually exclusive classification of a span pair."""

    DISJOINT = "disjoint"
    EXACT = "exact"
    PARTIAL = "partial"


def classify(a: Span, b: Span) -> OverlapClass:
    """Classify how two spans of the same document relate.

    Exact iff the endpoints coincide; Disjoint iff the intervals share no
    character position; Partial otherwise (including strict containment).
    """
    if a == b:
        return OverlapClass.EXACT
    if max(a.start, b.start) >= min(a.end, b.end):
        return OverlapClass.DISJOINT
    return OverlapClass.PARTIAL


def combine(a: Span, b: Span) -> Span:
    """Return the minimal interval covering two overlapping spans.

    Because the inputs overlap, the cover is contiguous and its text is a
    verbatim substring of the document. Raises NotCombinable for disjoint
    spans: the cover would include gap text belonging to neither answer.
    """
    if classify(a, b) is OverlapClass.DISJOINT:
        raise NotCombinable(
            f"spans [{a.start}, {a.end}) and [{b.start}, {b.end}) do not overlap"
        )
    return Span(min(a.start, b.start), max(a.end, b.end))
