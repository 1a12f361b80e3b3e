"""Corpus and dataset I/O: JSONL corpora, SQuAD-style JSON, review sheets.

Every example imported from a SQuAD-style file is grounded: its answer text
must occur verbatim in the context, else the example is dropped and counted.
Saved files are standard SQuAD-style JSON with two additive per-qa fields
(provenance, iteration), so they stay loadable by stock SQuAD tooling.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DuplicateId, EmptyCorpus, ParseError
from .types import (
    AnswerCandidate,
    Dataset,
    Document,
    Provenance,
    QAExample,
    Span,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = "1.0"


def load_corpus(path: str | Path) -> list[Document]:
    """Read a JSONL corpus of {"id", "text"} records, in file order."""
    documents: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}", line=lineno) from exc
            if not isinstance(record, dict) or "id" not in record or "text" not in record:
                raise ParseError("corpus record needs 'id' and 'text'", line=lineno)
            doc_id = record["id"]
            if doc_id in seen:
                raise DuplicateId(f"duplicate document id {doc_id!r} at line {lineno}")
            seen.add(doc_id)
            try:
                documents.append(Document(id=doc_id, text=record["text"]))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
    if not documents:
        raise EmptyCorpus(f"no documents in {path}")
    return documents


def save_corpus(documents: Iterable[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for doc in documents:
            handle.write(json.dumps({"id": doc.id, "text": doc.text}, ensure_ascii=False))
            handle.write("\n")


@dataclass(slots=True)
class GroundingReport:
    """Counts from one SQuAD-style import."""

    total_qas: int = 0
    imported: int = 0
    dropped_ungrounded: int = 0
    dropped_invalid: int = 0
    dropped_duplicate_keys: int = 0
    corrected_offsets: int = 0

    def to_dict(self) -> dict[str, int]:
        return {
            "total_qas": self.total_qas,
            "imported": self.imported,
            "dropped_ungrounded": self.dropped_ungrounded,
            "dropped_invalid": self.dropped_invalid,
            "dropped_duplicate_keys": self.dropped_duplicate_keys,
            "corrected_offsets": self.corrected_offsets,
        }


@dataclass(slots=True)
class ImportResult:
    dataset: Dataset
    report: GroundingReport


def _char_offset_from_bytes(context: str, byte_offset: int) -> int | None:
    """Map a UTF-8 byte offset to a character offset, if on a boundary."""
    encoded = context.encode("utf-8")
    if not 0 <= byte_offset <= len(encoded):
        return None
    try:
        return len(encoded[:byte_offset].decode("utf-8"))
    except UnicodeDecodeError:
        return None


def _resolve_answer_start(context: str, text: str, hint: int) -> tuple[int | None, bool]:
    """Locate the answer in the context; returns (char offset, was corrected).

    Tries the hint as a scalar-value offset, then as a UTF-8 byte offset, then
    falls back to the first verbatim occurrence. None when the text does not
    occur at all.
    """
    if 0 <= hint <= len(context) - len(text) and context[hint : hint + len(text)] == text:
        return hint, False
    as_char = _char_offset_from_bytes(context, hint)
    if (
        as_char is not None
        and context[as_char : as_char + len(text)] == text
    ):
        return as_char, True
    found = context.find(text)
    if found >= 0:
        return found, True
    return None, False


def _parse_provenance(raw: object) -> Provenance:
    if isinstance(raw, str):
        for member in Provenance:
            if raw == member.value:
                return member
    raise ParseError(f"unknown provenance {raw!r}")


def import_squad(
    path: str | Path,
    *,
    force_seed_import: bool = False,
) -> ImportResult:
    """Import a SQuAD-style file, enforcing grounding, with a count report.

    Each qa contributes one example using its first answer. With
    force_seed_import set, provenance/iteration are stamped SEED_IMPORT/0
    regardless of any stored fields; otherwise the additive per-qa fields are
    honored, defaulting to SEED_IMPORT/0 when absent.

    Document identity: an explicit per-paragraph "document_id" wins; else the
    entry title names a single-paragraph entry, and multi-paragraph entries
    get "title#p<j>". A reused id with different text is suffixed to stay
    unique.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(payload, dict) or not isinstance(payload.get("data"), list):
        raise ParseError(f"{path} is not a SQuAD-style file (missing 'data' list)")

    dataset = Dataset()
    report = GroundingReport()
    contexts_by_id: dict[str, str] = {}

    for entry_index, entry in enumerate(payload["data"]):
        title = entry.get("title") or f"doc{entry_index}"
        paragraphs = entry.get("paragraphs", [])
        for para_index, paragraph in enumerate(paragraphs):
            context = paragraph.get("context")
            if not isinstance(context, str) or not context:
                raise ParseError(
                    f"entry {entry_index} paragraph {para_index} has no context"
                )
            doc_id = paragraph.get("document_id")
            if not doc_id:
                doc_id = title if len(paragraphs) == 1 else f"{title}#p{para_index}"
            base_id, bump = doc_id, 2
            while doc_id in contexts_by_id and contexts_by_id[doc_id] != context:
                doc_id = f"{base_id}#{bump}"
                bump += 1
            contexts_by_id[doc_id] = context

            for qa in paragraph.get("qas", []):
                report.total_qas += 1
                question = qa.get("question") or ""
                answers = qa.get("answers") or []
                if not question or not answers:
                    report.dropped_invalid += 1
                    continue
                answer_text = answers[0].get("text") or ""
                if not answer_text:
                    report.dropped_invalid += 1
                    continue
                hint = answers[0].get("answer_start", -1)
                start, corrected = _resolve_answer_start(
                    context, answer_text, hint if isinstance(hint, int) else -1
                )
                if start is None:
                    report.dropped_ungrounded += 1
                    continue
                if corrected:
                    report.corrected_offsets += 1
                    logger.info(
                        "corrected answer offset for %r in document %r",
                        answer_text,
                        doc_id,
                    )
                if force_seed_import:
                    provenance, iteration = Provenance.SEED_IMPORT, 0
                else:
                    provenance = _parse_provenance(qa.get("provenance", "seed_import"))
                    iteration = qa.get("iteration", 0)
                example = QAExample(
                    document_id=doc_id,
                    question=question,
                    answer=AnswerCandidate(
                        span=Span(start, start + len(answer_text)), text=answer_text
                    ),
                    provenance=provenance,
                    iteration=iteration,
                )
                if example.key in dataset:
                    report.dropped_duplicate_keys += 1
                    logger.info("dropping duplicate key %r", example.key)
                    continue
                dataset.add(example, context=context)
                report.imported += 1
    return ImportResult(dataset=dataset, report=report)


def load_squad(path: str | Path) -> Dataset:
    """Import an external SQuAD-style seed file (SEED_IMPORT, iteration 0)."""
    return import_squad(path, force_seed_import=True).dataset


def load_dataset(path: str | Path) -> Dataset:
    """Load a dataset saved by save_dataset, honoring the additive fields."""
    return import_squad(path).dataset


def to_squad_dict(ds: Dataset) -> dict:
    """Dataset as a SQuAD-style JSON object, one paragraph per document.

    Documents appear in first-use order of the examples; qas keep insertion
    order. Requires the dataset to know the text of every referenced
    document.
    """
    by_document: dict[str, list[QAExample]] = {}
    for example in ds:
        by_document.setdefault(example.document_id, []).append(example)

    data = []
    for doc_id, examples in by_document.items():
        context = ds.context_for(doc_id)
        if context is None:
            raise ValueError(
                f"cannot serialize: no text recorded for document {doc_id!r}"
            )
        qas = [
            {
                "id": f"{doc_id}::{index}",
                "question": example.question,
                "answers": [
                    {
                        "text": example.answer.text,
                        "answer_start": example.answer.span.start,
                    }
                ],
                "provenance": example.provenance.value,
                "iteration": example.iteration,
            }
            for index, example in enumerate(examples)
        ]
        data.append(
            {
                "title": doc_id,
                "paragraphs": [
                    {"context": context, "document_id": doc_id, "qas": qas}
                ],
            }
        )
    return {"version": FORMAT_VERSION, "data": data}


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write a dataset as SQuAD-style JSON (see to_squad_dict)."""
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(to_squad_dict(ds), handle, ensure_ascii=False, indent=2)
        handle.write("\n")


REVIEW_SHEET_COLUMNS = ("document", "question", "answer_a", "answer_b", "verdict")
REVIEW_VERDICTS = ("a_better", "b_better", "both_bad")


def _cell(value: str) -> str:
    """Flatten whitespace that would break the tab-separated layout."""
    return " ".join(value.split())


def export_review_sheet(
    pairs: list[tuple[QAExample, QAExample]],
    path: str | Path,
    contexts: Mapping[str, str],
) -> None:
    """Write a review sheet: one row per pair, blank verdict column.

    Pairs share (document, question) and differ in answers; rows keep the
    given order so sheets are reproducible.
    """
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t")
        writer.writerow(REVIEW_SHEET_COLUMNS)
        for example_a, example_b in pairs:
            document = contexts.get(example_a.document_id, "")
            writer.writerow(
                [
                    _cell(document),
                    _cell(example_a.question),
                    _cell(example_a.answer.text),
                    _cell(example_b.answer.text),
                    "",
                ]
            )


def import_review_sheet(path: str | Path) -> dict[str, int]:
    """Tally the verdict column of a filled review sheet.

    Counts a_better / b_better / both_bad; blank verdicts are skipped and
    unknown values are skipped with a warning.
    """
    tallies = {verdict: 0 for verdict in REVIEW_VERDICTS}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t")
        header = next(reader, None)
        if header is None or tuple(header) != REVIEW_SHEET_COLUMNS:
            raise ParseError(f"{path} is not a review sheet (bad header)")
        for row in reader:
            if not row:
                continue
            verdict = row[-1].strip() if len(row) == len(REVIEW_SHEET_COLUMNS) else ""
            if not verdict:
                continue
            if verdict not in tallies:
                logger.warning("ignoring unknown verdict %r", verdict)
                continue
            tallies[verdict] += 1
    return tallies
