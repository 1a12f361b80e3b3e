"""Iterative generation loop: partition, fit, generate, filter, reseed.

Each iteration fits the backends on the current seed set, runs the
extract -> generate -> filter chain over one corpus partition, and folds the
surviving examples back into the seed set. Per-document work can run in
parallel; fit hooks and the seed update are global barriers.
"""

from __future__ import annotations

import json
import logging
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

from .dataset_io import load_dataset, save_dataset
from .errors import CheckpointError, EmptyCorpus, InvalidSeed, NotEnoughPairs
from .extraction import ExtractorBackend, cap_candidates, extract
from .filtering import FilterBackend, decision_counter, filter_document_detailed
from .generation import GeneratorBackend, TagConfig, generate_questions
from .types import Dataset, Document, DuplicatePolicy, QAExample

logger = logging.getLogger(__name__)


class SeedUpdate(Enum):
    """How the seed set absorbs each iteration's output."""

    MERGE = "merge"
    REPLACE = "replace"


@dataclass(frozen=True, slots=True)
class SnowballConfig:
    """Knobs for one full iterative run."""

    iterations: int
    rng_seed: int = 0
    seed_update: SeedUpdate = SeedUpdate.MERGE
    freeze_ae_qg_after_first: bool = True
    max_candidates_per_doc: int = 16
    parallelism: int = 1
    tags: TagConfig = TagConfig()

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.max_candidates_per_doc < 1:
            raise ValueError("max_candidates_per_doc must be >= 1")


@dataclass(slots=True)
class BackendSuite:
    """The three pluggable model roles."""

    extractor: ExtractorBackend
    generator: GeneratorBackend
    filter: FilterBackend


@dataclass(slots=True)
class IterationReport:
    """Observability counters for one iteration."""

    iteration: int
    docs_processed: int = 0
    candidates_extracted: int = 0
    questions_generated: int = 0
    decision_counts: dict[str, int] = field(default_factory=decision_counter)
    output_size: int = 0
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "docs_processed": self.docs_processed,
            "candidates_extracted": self.candidates_extracted,
            "questions_generated": self.questions_generated,
            "decision_counts": dict(self.decision_counts),
            "output_size": self.output_size,
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "IterationReport":
        return cls(
            iteration=payload["iteration"],
            docs_processed=payload["docs_processed"],
            candidates_extracted=payload["candidates_extracted"],
            questions_generated=payload["questions_generated"],
            decision_counts=dict(payload["decision_counts"]),
            output_size=payload["output_size"],
            wall_time=payload["wall_time"],
        )


def partition(corpus: list[Document], t: int, rng_seed: int) -> list[list[Document]]:
    """Split the corpus into t balanced parts, deterministically.

    Membership comes from a seeded shuffle followed by round-robin
    assignment; within each part documents keep their original corpus order,
    so a t=1 run degenerates to processing the corpus in file order.
    """
    if not corpus:
        raise EmptyCorpus("cannot partition an empty corpus")
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    indices = list(range(len(corpus)))
    random.Random(rng_seed).shuffle(indices)
    parts: list[list[int]] = [[] for _ in range(t)]
    for position, index in enumerate(indices):
        parts[position % t].append(index)
    return [[corpus[i] for i in sorted(part)] for part in parts]


def _serialize_lock(backend: object) -> threading.Lock | None:
    if getattr(backend, "concurrent_safe", True):
        return None
    return threading.Lock()


@dataclass(slots=True)
class _DocumentResult:
    generated: Dataset
    candidates: int
    questions: int
    decisions: dict[str, int]


def _run_document(
    doc: Document,
    backends: BackendSuite,
    cfg: SnowballConfig,
    iteration: int,
    locks: dict[str, threading.Lock | None],
) -> _DocumentResult:
    """Extract -> generate -> filter one document."""

    def _locked(role: str, call: Callable):
        lock = locks[role]
        if lock is None:
            return call()
        with lock:
            return call()

    candidates = _locked("extractor", lambda: extract(doc, backends.extractor))
    candidates = cap_candidates(candidates, cfg.max_candidates_per_doc)
    pairs = _locked(
        "generator",
        lambda: generate_questions(doc, candidates, backends.generator, cfg.tags),
    )
    generated, decisions = _locked(
        "filter",
        lambda: filter_document_detailed(doc, pairs, backends.filter, iteration),
    )
    return _DocumentResult(generated, len(candidates), len(pairs), decisions)


def _merge_newer(base: Dataset, newer: Dataset) -> Dataset:
    """Union with duplicate keys resolved in favor of the newer example."""
    merged = base.copy(DuplicatePolicy.LAST_WRITE_WINS)
    for doc_id, text in newer.contexts.items():
        merged.record_context(doc_id, text)
    for example in newer:
        merged.add(example)
    return merged


class _Checkpoint:
    """Per-iteration directory layout under one checkpoint root.

    iter_<i>/generated.json   the iteration's generated dataset
    iter_<i>/seed.json        the seed set after the update step
    iter_<i>/report.json      the IterationReport
    iter_<i>/rng_state.json   the RNG state after partitioning
    iter_<i>/DONE             marker written last; its presence means complete
    """

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _iter_dir(self, iteration: int) -> Path:
        return self.root / f"iter_{iteration:03d}"

    def is_complete(self, iteration: int) -> bool:
        return (self._iter_dir(iteration) / "DONE").exists()

    def write_partition(self, parts: list[list[Document]]) -> None:
        payload = [[doc.id for doc in part] for part in parts]
        self._write_json(self.root / "partition.json", payload)

    def verify_partition(self, parts: list[list[Document]]) -> None:
        path = self.root / "partition.json"
        if not path.exists():
            return
        stored = json.loads(path.read_text(encoding="utf-8"))
        current = [[doc.id for doc in part] for part in parts]
        if stored != current:
            raise CheckpointError(
                f"checkpoint at {self.root} was created for a different "
                "corpus/seed/iteration-count; refusing to resume"
            )

    def write_iteration(
        self,
        iteration: int,
        generated: Dataset,
        seed: Dataset,
        report: IterationReport,
        rng_state: tuple,
    ) -> None:
        directory = self._iter_dir(iteration)
        directory.mkdir(parents=True, exist_ok=True)
        save_dataset(generated, directory / "generated.json")
        save_dataset(seed, directory / "seed.json")
        self._write_json(directory / "report.json", report.to_dict())
        self._write_json(directory / "rng_state.json", _rng_state_to_json(rng_state))
        (directory / "DONE").write_text("", encoding="utf-8")

    def load_iteration(self, iteration: int) -> tuple[Dataset, Dataset, IterationReport]:
        directory = self._iter_dir(iteration)
        generated = load_dataset(directory / "generated.json")
        seed = load_dataset(directory / "seed.json")
        report = IterationReport.from_dict(
            json.loads((directory / "report.json").read_text(encoding="utf-8"))
        )
        return generated, seed, report

    @staticmethod
    def _write_json(path: Path, payload: object) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(
            json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        tmp.replace(path)


def _rng_state_to_json(state: tuple) -> list:
    version, internal, gauss = state
    return [version, list(internal), gauss]


def run_snowball(
    seed: Dataset,
    corpus: list[Document],
    backends: BackendSuite,
    cfg: SnowballConfig,
    checkpoint_dir: str | Path | None = None,
) -> tuple[list[Dataset], list[IterationReport]]:
    """Run the full iterative loop; returns per-iteration datasets and reports.

    Iteration i fits the backends on the current seed set (the extractor and
    generator only at i=1 when the freeze flag is set; the filter every
    iteration), generates data for partition i, and updates the seed set per
    the configured strategy (merge resolves duplicate keys in favor of the
    newer example).

    With a checkpoint directory, every completed iteration is persisted and a
    rerun resumes at the first incomplete iteration; a backend failure aborts
    the run leaving completed iterations checkpointed.
    """
    if len(seed) == 0:
        raise InvalidSeed("the seed set must be non-empty")
    if not corpus:
        raise EmptyCorpus("the corpus must be non-empty")

    parts = partition(corpus, cfg.iterations, cfg.rng_seed)
    rng = random.Random(cfg.rng_seed)

    checkpoint = _Checkpoint(checkpoint_dir) if checkpoint_dir is not None else None
    if checkpoint is not None:
        checkpoint.verify_partition(parts)
        checkpoint.write_partition(parts)

    current_seed = seed.copy()
    outputs: list[Dataset] = []
    reports: list[IterationReport] = []

    start_iteration = 1
    if checkpoint is not None:
        while start_iteration <= cfg.iterations and checkpoint.is_complete(start_iteration):
            generated, current_seed, report = checkpoint.load_iteration(start_iteration)
            outputs.append(generated)
            reports.append(report)
            logger.info("resuming past completed iteration %d", start_iteration)
            start_iteration += 1

    locks = {
        "extractor": _serialize_lock(backends.extractor),
        "generator": _serialize_lock(backends.generator),
        "filter": _serialize_lock(backends.filter),
    }

    for i in range(start_iteration, cfg.iterations + 1):
        began = time.monotonic()
        if i == 1:
            backends.extractor.fit(current_seed)
            backends.generator.fit(current_seed)
            backends.filter.fit(current_seed)
        else:
            if not cfg.freeze_ae_qg_after_first:
                backends.extractor.fit(current_seed)
                backends.generator.fit(current_seed)
            backends.filter.fit(current_seed)

        report = IterationReport(iteration=i)
        part = parts[i - 1]

        def _work(doc: Document) -> _DocumentResult:
            return _run_document(doc, backends, cfg, i, locks)

        if cfg.parallelism == 1:
            results = [_work(doc) for doc in part]
        else:
            with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
                results = list(pool.map(_work, part))

        generated = Dataset()
        for doc, result in zip(part, results):
            report.docs_processed += 1
            report.candidates_extracted += result.candidates
            report.questions_generated += result.questions
            for key, value in result.decisions.items():
                report.decision_counts[key] += value
            for example in result.generated:
                generated.add(example, context=doc.text)
        report.output_size = len(generated)

        if cfg.seed_update is SeedUpdate.MERGE:
            current_seed = _merge_newer(current_seed, generated)
        else:
            current_seed = generated.copy()
        report.wall_time = time.monotonic() - began

        outputs.append(generated)
        reports.append(report)
        logger.info(
            "iteration %d: %d docs -> %d examples (%.2fs)",
            i,
            report.docs_processed,
            report.output_size,
            report.wall_time,
        )
        if checkpoint is not None:
            checkpoint.write_iteration(i, generated, current_seed, report, rng.getstate())

    return outputs, reports


def dataset_diff(
    a: Dataset,
    b: Dataset,
) -> tuple[Dataset, Dataset, Dataset, list[tuple[QAExample, QAExample]]]:
    """Key-wise comparison of two datasets.

    Returns (a minus b, b minus a, intersection with identical answer spans,
    intersection pairs with differing answer spans). Set membership is keyed
    on (document_id, question); the same-answer intersection keeps a's
    examples.
    """
    a_minus_b = Dataset()
    b_minus_a = Dataset()
    same_answer = Dataset()
    diff_answer: list[tuple[QAExample, QAExample]] = []

    for example in a:
        other = b.get(example.key)
        if other is None:
            a_minus_b.add(example, context=a.context_for(example.document_id))
        elif other.answer.span == example.answer.span:
            same_answer.add(example, context=a.context_for(example.document_id))
        else:
            diff_answer.append((example, other))
    for example in b:
        if example.key not in a:
            b_minus_a.add(example, context=b.context_for(example.document_id))
    return a_minus_b, b_minus_a, same_answer, diff_answer


def sample_human_eval_pairs(
    a: Dataset,
    b: Dataset,
    n: int,
    rng_seed: int,
) -> list[tuple[QAExample, QAExample]]:
    """Sample n same-key different-answer pairs, uniformly without replacement.

    Deterministic under rng_seed. Raises NotEnoughPairs when fewer than n
    pairs are eligible.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    _, _, _, eligible = dataset_diff(a, b)
    if len(eligible) < n:
        raise NotEnoughPairs(n, len(eligible))
    return random.Random(rng_seed).sample(eligible, n)
