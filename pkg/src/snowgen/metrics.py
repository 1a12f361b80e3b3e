"""Exact-match and token-level F1 scoring with dataset aggregation.

Normalization follows the common MRC convention: lowercase, drop a fixed
punctuation set, drop English articles (whitespace mode only), collapse
whitespace. CJK text is scored per character; Auto mode picks per string.
"""

from __future__ import annotations

import logging
import string
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .types import Dataset

logger = logging.getLogger(__name__)


class Tokenizer(Enum):
    """How answer strings are split into tokens for F1."""

    WHITESPACE = "whitespace"
    PER_CHARACTER = "per_character"
    AUTO = "auto"


# Letter blocks only: ideographs, kana, hangul. CJK punctuation and fullwidth
# forms are deliberately excluded so mode detection is stable under
# punctuation removal.
_CJK_LETTER_RANGES = (
    (0x3040, 0x30FF),  # hiragana, katakana
    (0x3400, 0x4DBF),  # CJK extension A
    (0x4E00, 0x9FFF),  # CJK unified ideographs
    (0xAC00, 0xD7A3),  # hangul syllables
    (0xF900, 0xFAFF),  # CJK compatibility ideographs
    (0x20000, 0x2FFFF),  # supplementary ideographic planes
)

_PUNCTUATION = frozenset(string.punctuation) | frozenset(
    "，。！？；：、（）《》【】「」『』“”‘’·～…—"
)

_ARTICLES = frozenset({"a", "an", "the"})


def has_cjk(s: str) -> bool:
    """True when the string contains at least one CJK letter."""
    return any(
        lo <= ord(ch) <= hi for ch in s for lo, hi in _CJK_LETTER_RANGES
    )


def _effective_mode(s: str, tok: Tokenizer) -> Tokenizer:
    if tok is not Tokenizer.AUTO:
        return tok
    return Tokenizer.PER_CHARACTER if has_cjk(s) else Tokenizer.WHITESPACE


def normalize(s: str, *, strip_articles: bool = True) -> str:
    """Canonical answer form: lowercased, punctuation-free, single-spaced.

    Articles {a, an, the} are dropped as whole tokens only when
    strip_articles is set (the English whitespace convention).
    """
    lowered = s.lower()
    no_punct = "".join(ch for ch in lowered if ch not in _PUNCTUATION)
    tokens = no_punct.split()
    if strip_articles:
        tokens = [t for t in tokens if t not in _ARTICLES]
    return " ".join(tokens)


def tokenize(s: str, tok: Tokenizer = Tokenizer.WHITESPACE) -> list[str]:
    """Normalize then split into tokens per the tokenizer mode."""
    mode = _effective_mode(s, tok)
    if mode is Tokenizer.WHITESPACE:
        return normalize(s, strip_articles=True).split()
    return [ch for ch in normalize(s, strip_articles=False) if not ch.isspace()]


def exact_match(pred: str, gold: str, tok: Tokenizer = Tokenizer.WHITESPACE) -> int:
    """1 iff the normalized prediction equals the normalized gold answer."""
    strip_pred = _effective_mode(pred, tok) is Tokenizer.WHITESPACE
    strip_gold = _effective_mode(gold, tok) is Tokenizer.WHITESPACE
    return int(
        normalize(pred, strip_articles=strip_pred)
        == normalize(gold, strip_articles=strip_gold)
    )


def f1(pred: str, gold: str, tok: Tokenizer = Tokenizer.WHITESPACE) -> float:
    """Harmonic mean of token-multiset precision and recall.

    Zero when the token multisets share nothing; one when both token lists
    are empty.
    """
    pred_tokens = tokenize(pred, tok)
    gold_tokens = tokenize(gold, tok)
    if not pred_tokens and not gold_tokens:
        return 1.0
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True, slots=True)
class ScoreReport:
    """Aggregate EM/F1 over a scored dataset."""

    em: float
    f1: float
    count: int

    def to_dict(self) -> dict[str, float | int]:
        return {"em": round(self.em, 4), "f1": round(self.f1, 4), "count": self.count}

    def __str__(self) -> str:
        return f"em={self.em:.4f} f1={self.f1:.4f} count={self.count}"


def score_dataset(
    predictions: Mapping[tuple[str, str], str],
    gold: Dataset,
    tok: Tokenizer = Tokenizer.WHITESPACE,
) -> ScoreReport:
    """Unweighted mean EM/F1 of predictions against every gold example.

    Predictions are keyed like the dataset, on (document_id, question). A
    missing prediction scores as the empty string and is still counted.
    """
    if len(gold) == 0:
        return ScoreReport(em=0.0, f1=0.0, count=0)
    em_total = 0
    f1_total = 0.0
    for example in gold:
        pred = predictions.get(example.key)
        if pred is None:
            logger.warning("no prediction for key %r; scoring empty string", example.key)
            pred = ""
        em_total += exact_match(pred, example.answer.text, tok)
        f1_total += f1(pred, example.answer.text, tok)
    n = len(gold)
    return ScoreReport(em=em_total / n, f1=f1_total / n, count=n)
