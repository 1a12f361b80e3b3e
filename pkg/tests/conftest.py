from __future__ import annotations

import random

import pytest

from snowgen.types import (
    AnswerCandidate,
    Dataset,
    Document,
    Provenance,
    QAExample,
    Span,
    make_candidate,
)


def make_doc(text: str, doc_id: str = "d1") -> Document:
    return Document(id=doc_id, text=text)


def example_for(
    doc: Document,
    start: int,
    end: int,
    question: str,
    provenance: Provenance = Provenance.SEED_IMPORT,
    iteration: int = 0,
) -> QAExample:
    return QAExample(
        document_id=doc.id,
        question=question,
        answer=make_candidate(doc, Span(start, end)),
        provenance=provenance,
        iteration=iteration,
    )


def random_dataset(rng: random.Random, n_examples: int, doc_prefix: str = "doc") -> Dataset:
    """A dataset of n grounded examples over random lowercase documents."""
    ds = Dataset()
    for i in range(n_examples):
        length = rng.randint(4, 40)
        text = "".join(rng.choice("abcdefg hij") for _ in range(length))
        if not text.strip():
            text = "abcd"
        doc = Document(id=f"{doc_prefix}{i}", text=text)
        start = rng.randrange(0, len(text))
        end = rng.randint(start + 1, len(text))
        provenance = rng.choice(list(Provenance))
        ds.add(
            example_for(
                doc,
                start,
                end,
                question=f"q{i} {rng.randint(0, 99)}",
                provenance=provenance,
                iteration=rng.randint(0, 3),
            ),
            context=doc.text,
        )
    return ds


@pytest.fixture
def doc() -> Document:
    return make_doc("Mark Twain was born on November 30, 1835, in Florida, Missouri.")
