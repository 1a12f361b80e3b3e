from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snowgen.metrics import (
    ScoreReport,
    Tokenizer,
    exact_match,
    f1,
    normalize,
    score_dataset,
    tokenize,
)
from snowgen.types import Dataset

from conftest import example_for, make_doc


def oracle_f1(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    """Brute-force multiset intersection via per-token minimum counts."""
    overlap = sum(
        min(pred_tokens.count(tok), gold_tokens.count(tok)) for tok in set(pred_tokens)
    )
    if not pred_tokens and not gold_tokens:
        return 1.0
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


class TestNormalize:
    def test_article_and_punctuation(self):
        assert normalize("The  Cat!") == "cat"

    def test_empty(self):
        assert normalize("") == ""

    def test_fixed_point(self):
        assert normalize("cat") == "cat"

    def test_keeps_articles_when_asked(self):
        assert normalize("The Cat", strip_articles=False) == "the cat"

    def test_strips_cjk_punctuation(self):
        assert normalize("答案，是这个。") == "答案是这个"

    @given(st.text(max_size=60))
    @settings(max_examples=300, deadline=None)
    def test_idempotent(self, s: str):
        assert normalize(normalize(s)) == normalize(s)


class TestExactMatch:
    def test_case_and_punctuation_insensitive(self):
        assert exact_match("Florida, Missouri", "florida missouri") == 1

    def test_reflexive(self):
        for s in ["cat", "约0.72%", "", "The   Answer!"]:
            assert exact_match(s, s) == 1

    def test_mismatch(self):
        assert exact_match("cat", "dog") == 0


class TestF1:
    def test_worked_case_per_character(self):
        assert f1("a b c", "b c d", Tokenizer.PER_CHARACTER) == pytest.approx(
            2 / 3, abs=1e-12
        )

    def test_identical_non_empty(self):
        assert f1("some answer", "some answer") == 1.0

    def test_disjoint_tokens(self):
        assert f1("aa bb", "cc dd") == 0.0

    def test_both_empty(self):
        assert f1("", "") == 1.0

    def test_cjk_per_character_auto(self):
        # punctuation is normalized away: both sides reduce to 约 0 7 2
        assert f1("约0.72%", "约0.72", Tokenizer.AUTO) == 1.0
        # 约/0/7/2/的 vs 约/0/7/2: overlap 4, precision 4/5, recall 1
        value = f1("约072的", "约072", Tokenizer.AUTO)
        assert value == pytest.approx(2 * (4 / 5) / (4 / 5 + 1))

    def test_agrees_with_oracle_randomized(self):
        rng = random.Random(3)
        alphabet = ["a", "b", "c", "d", "e"]
        for _ in range(2000):
            pred_tokens = [rng.choice(alphabet) for _ in range(rng.randint(0, 8))]
            gold_tokens = [rng.choice(alphabet) for _ in range(rng.randint(0, 8))]
            pred, gold = " ".join(pred_tokens), " ".join(gold_tokens)
            expected = oracle_f1(tokenize(pred, Tokenizer.PER_CHARACTER),
                                 tokenize(gold, Tokenizer.PER_CHARACTER))
            assert f1(pred, gold, Tokenizer.PER_CHARACTER) == pytest.approx(expected)

    @given(st.text(max_size=30), st.text(max_size=30))
    @settings(max_examples=300, deadline=None)
    def test_symmetric_and_bounded(self, pred: str, gold: str):
        for mode in Tokenizer:
            value = f1(pred, gold, mode)
            assert 0.0 <= value <= 1.0
            assert value == pytest.approx(f1(gold, pred, mode))

    @given(st.text(max_size=30), st.text(max_size=30))
    @settings(max_examples=300, deadline=None)
    def test_em_implies_f1(self, pred: str, gold: str):
        for mode in Tokenizer:
            if exact_match(pred, gold, mode) == 1:
                assert f1(pred, gold, mode) == 1.0

    def test_invariant_under_token_permutation(self):
        rng = random.Random(9)
        for _ in range(200):
            tokens = [rng.choice("abcde") for _ in range(rng.randint(1, 8))]
            shuffled = tokens[:]
            rng.shuffle(shuffled)
            assert f1(" ".join(tokens), "a b d", Tokenizer.PER_CHARACTER) == (
                f1(" ".join(shuffled), "a b d", Tokenizer.PER_CHARACTER)
            )


class TestScoreDataset:
    def _dataset(self):
        ds = Dataset()
        doc_a = make_doc("a b c xyz", "da")
        doc_b = make_doc("a b c xyz", "db")
        ds.add(example_for(doc_a, 0, 5, "q1"), context=doc_a.text)  # gold "a b c"
        ds.add(example_for(doc_b, 0, 5, "q2"), context=doc_b.text)
        return ds

    def test_perfect_predictions(self):
        ds = self._dataset()
        predictions = {ex.key: ex.answer.text for ex in ds}
        report = score_dataset(predictions, ds, Tokenizer.PER_CHARACTER)
        assert report.em == 1.0
        assert report.f1 == 1.0
        assert report.count == 2

    def test_all_empty_predictions(self):
        ds = self._dataset()
        predictions = {ex.key: "" for ex in ds}
        report = score_dataset(predictions, ds, Tokenizer.PER_CHARACTER)
        assert report.em == 0.0
        assert report.f1 == 0.0

    def test_mean_of_per_example_f1(self):
        # gold "a b c" twice; predictions scoring f1 = 1 and f1 = 1/3
        ds = self._dataset()
        predictions = {("da", "q1"): "a b c", ("db", "q2"): "a x y"}
        report = score_dataset(predictions, ds, Tokenizer.PER_CHARACTER)
        assert report.f1 == pytest.approx(2 / 3)

    def test_missing_prediction_counts_as_empty(self, caplog):
        ds = self._dataset()
        with caplog.at_level("WARNING"):
            report = score_dataset({}, ds, Tokenizer.PER_CHARACTER)
        assert report.count == 2
        assert report.em == 0.0

    def test_report_formatting(self):
        report = ScoreReport(em=1.0, f1=2 / 3, count=3)
        assert str(report) == "em=1.0000 f1=0.6667 count=3"
        assert report.to_dict() == {"em": 1.0, "f1": 0.6667, "count": 3}
