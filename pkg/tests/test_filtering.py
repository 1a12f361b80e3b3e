from __future__ import annotations

import pytest

from snowgen.errors import BackendFailure
from snowgen.filtering import (
    DecisionKind,
    FilterDecision,
    FragmentMatchFilter,
    filter_document,
    filter_document_detailed,
    filter_pair,
    locate_answer,
)
from snowgen.types import Document, Provenance, Span, make_candidate

from conftest import make_doc


class SpanTableFilter:
    """Answers each question with a preconfigured span, or abstains."""

    concurrent_safe = True

    def __init__(self, table: dict[str, tuple[int, int] | None]):
        self.table = table

    def answer(self, doc: Document, question: str):
        entry = self.table.get(question)
        if entry is None:
            return None
        return make_candidate(doc, Span(*entry))

    def fit(self, seed):
        pass


class TestFilterPair:
    def test_partial_overlap_combines_uranium_case(self):
        doc = make_doc("天然铀矿包含三种同位素：大部分为铀238，约0.72%的铀235。")
        question = "天然铀矿含有多少百分比的铀235？"
        candidate_start = doc.text.find("约0.72")
        candidate = make_candidate(doc, Span(candidate_start, candidate_start + 5))
        assert candidate.text == "约0.72"
        tilde_start = doc.text.find("0.72%")
        backend = SpanTableFilter({question: (tilde_start, tilde_start + 5)})
        decision = filter_pair(doc, candidate, question, backend)
        assert decision.kind is DecisionKind.COMBINED
        assert decision.new_answer.text == "约0.72%"

    def test_exact_match_kept(self):
        doc = make_doc("abcdefgh")
        candidate = make_candidate(doc, Span(2, 5))
        decision = filter_pair(doc, candidate, "q", SpanTableFilter({"q": (2, 5)}))
        assert decision == FilterDecision(DecisionKind.KEPT_EXACT)

    def test_disjoint_discarded_romanization_case(self):
        doc = make_doc("1881年时它被矿工叫做金山(goldmountain)，朱诺山一名出现在1888年。")
        question = "朱诺山的矿工叫什么名字？"
        candidate_start = doc.text.find("goldmountain")
        candidate = make_candidate(
            doc, Span(candidate_start, candidate_start + len("goldmountain"))
        )
        tilde_start = doc.text.find("金山")
        backend = SpanTableFilter({question: (tilde_start, tilde_start + 2)})
        decision = filter_pair(doc, candidate, question, backend)
        assert decision.kind is DecisionKind.DISCARDED

    def test_abstention(self):
        doc = make_doc("abc")
        decision = filter_pair(
            doc, make_candidate(doc, Span(0, 2)), "q", SpanTableFilter({})
        )
        assert decision.kind is DecisionKind.ABSTAINED

    def test_backend_failure_carries_context(self):
        class Broken:
            concurrent_safe = True

            def answer(self, doc, question):
                raise RuntimeError("down")

            def fit(self, seed):
                pass

        doc = make_doc("abc")
        with pytest.raises(BackendFailure, match="d1"):
            filter_pair(doc, make_candidate(doc, Span(0, 2)), "q", Broken())

    def test_combined_contains_original(self):
        doc = make_doc("abcdefghij")
        for start in range(9):
            for end in range(start + 1, 10):
                candidate = make_candidate(doc, Span(2, 6))
                backend = SpanTableFilter({"q": (start, end)})
                decision = filter_pair(doc, candidate, "q", backend)
                if decision.kind is DecisionKind.COMBINED:
                    assert decision.new_answer.span.start <= candidate.span.start
                    assert decision.new_answer.span.end >= candidate.span.end


class TestFilterDecisionInvariant:
    def test_combined_requires_answer(self):
        with pytest.raises(ValueError):
            FilterDecision(DecisionKind.COMBINED)
        doc = make_doc("abc")
        with pytest.raises(ValueError):
            FilterDecision(DecisionKind.DISCARDED, make_candidate(doc, Span(0, 1)))


class TestFilterDocument:
    def test_mixed_decisions(self):
        doc = make_doc("abcdefghij")
        pairs = [
            (make_candidate(doc, Span(0, 3)), "q-exact"),
            (make_candidate(doc, Span(0, 3)), "q-disjoint"),
            (make_candidate(doc, Span(0, 3)), "q-partial"),
        ]
        backend = SpanTableFilter(
            {"q-exact": (0, 3), "q-disjoint": (5, 8), "q-partial": (2, 6)}
        )
        result = filter_document(doc, pairs, backend, iteration=2)
        assert len(result) == 2
        by_question = {ex.question: ex for ex in result}
        assert by_question["q-exact"].provenance is Provenance.EXACT_MATCH
        assert by_question["q-partial"].provenance is Provenance.COMBINED
        assert by_question["q-partial"].answer.text == "abcdef"
        assert all(ex.iteration == 2 for ex in result)

    def test_empty_pairs(self):
        assert len(filter_document(make_doc("abc"), [], SpanTableFilter({}), 1)) == 0

    def test_all_abstained(self):
        doc = make_doc("abc")
        pairs = [(make_candidate(doc, Span(0, 2)), f"q{i}") for i in range(3)]
        result, counts = filter_document_detailed(doc, pairs, SpanTableFilter({}), 1)
        assert len(result) == 0
        assert counts["abstained"] == 3

    def test_duplicate_question_keeps_first(self):
        doc = make_doc("abcdefghij")
        pairs = [
            (make_candidate(doc, Span(0, 3)), "q"),
            (make_candidate(doc, Span(5, 8)), "q"),
        ]
        backend = SpanTableFilter({"q": (0, 3)})
        result, counts = filter_document_detailed(doc, pairs, backend, 1)
        assert counts["duplicate_key"] == 1
        (example,) = result.examples
        assert example.answer.text == "abc"

    def test_counts_sum_to_pairs(self):
        doc = make_doc("abcdefghij")
        table = {"q0": (0, 3), "q1": (5, 8), "q2": (2, 6), "q3": None}
        pairs = [(make_candidate(doc, Span(0, 3)), q) for q in ["q0", "q1", "q2", "q3", "q0"]]
        result, counts = filter_document_detailed(doc, pairs, SpanTableFilter(table), 1)
        assert sum(counts.values()) == len(pairs)
        assert counts["kept_exact"] + counts["combined"] == len(result)

    def test_grounding_preserved(self):
        doc = make_doc("abcdefghij")
        pairs = [(make_candidate(doc, Span(2, 5)), "q")]
        result = filter_document(doc, pairs, SpanTableFilter({"q": (4, 9)}), 1)
        for example in result:
            assert example.answer.text in doc.text


class TestLocateAnswer:
    def test_first_occurrence(self):
        doc = make_doc("the cat and the cat")
        found = locate_answer(doc, "the cat")
        assert (found.span.start, found.span.end) == (0, 7)

    def test_absent_text_abstains(self):
        assert locate_answer(make_doc("abc"), "zzz") is None

    def test_empty_text_abstains(self):
        assert locate_answer(make_doc("abc"), "") is None


class TestFragmentMatchFilter:
    def test_finds_longest_question_fragment(self):
        doc = make_doc("Mark Twain was born in 1835.")
        backend = FragmentMatchFilter()
        found = backend.answer(doc, "What is Mark Twain?")
        assert found is not None
        assert found.text == "Mark Twain"

    def test_abstains_without_common_text(self):
        doc = make_doc("zzzz")
        assert FragmentMatchFilter().answer(doc, "What?") is None

    def test_whitespace_only_fragment_ignored(self):
        doc = make_doc("   ")
        assert FragmentMatchFilter().answer(doc, "a b") is None
