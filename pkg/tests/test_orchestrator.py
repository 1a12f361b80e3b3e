from __future__ import annotations

import random

import pytest

from snowgen.errors import (
    BackendFailure,
    CheckpointError,
    EmptyCorpus,
    InvalidSeed,
    NotEnoughPairs,
)
from snowgen.orchestrator import (
    BackendSuite,
    SeedUpdate,
    SnowballConfig,
    dataset_diff,
    partition,
    run_snowball,
    sample_human_eval_pairs,
)
from snowgen.testing import CountingExtractor, CountingFilter, CountingGenerator
from snowgen.types import Dataset, Document, Provenance

from conftest import example_for, make_doc, random_dataset


def synthetic_corpus(n: int) -> list[Document]:
    docs = []
    for i in range(n):
        docs.append(
            Document(
                id=f"doc{i:03d}",
                text=f"Entry Number{i} was recorded in {1800 + i} by Alice Smith{i}.",
            )
        )
    return docs


def seed_dataset() -> Dataset:
    doc = make_doc("Seed Person was born in 1900.", "seed0")
    ds = Dataset()
    ds.add(
        example_for(doc, 0, 11, "Who is the seed about?", Provenance.SEED_IMPORT, 0),
        context=doc.text,
    )
    return ds


def counting_suite() -> BackendSuite:
    return BackendSuite(
        extractor=CountingExtractor(),
        generator=CountingGenerator(),
        filter=CountingFilter(),
    )


class TestPartition:
    def test_balanced_sizes(self):
        parts = partition(synthetic_corpus(10), 3, rng_seed=5)
        assert sorted(len(p) for p in parts) == [3, 3, 4]

    def test_single_part_keeps_corpus_order(self):
        corpus = synthetic_corpus(5)
        (part,) = partition(corpus, 1, rng_seed=7)
        assert part == corpus

    def test_deterministic(self):
        corpus = synthetic_corpus(20)
        first = partition(corpus, 4, rng_seed=99)
        second = partition(corpus, 4, rng_seed=99)
        assert first == second

    def test_seed_changes_membership(self):
        corpus = synthetic_corpus(20)
        assert partition(corpus, 4, rng_seed=1) != partition(corpus, 4, rng_seed=2)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            partition([], 1, rng_seed=0)

    def test_exhaustive_disjoint_coverage_balance(self):
        for n in range(1, 51):
            corpus = synthetic_corpus(n)
            for t in range(1, n + 1):
                parts = partition(corpus, t, rng_seed=n * 100 + t)
                ids = [doc.id for part in parts for doc in part]
                assert len(ids) == n
                assert set(ids) == {doc.id for doc in corpus}
                sizes = [len(part) for part in parts]
                assert max(sizes) - min(sizes) <= 1


class TestRunSnowball:
    def test_single_iteration_matches_stage_chain(self):
        from snowgen.extraction import cap_candidates, extract
        from snowgen.filtering import filter_document
        from snowgen.generation import generate_questions

        corpus = synthetic_corpus(8)
        suite = counting_suite()
        cfg = SnowballConfig(iterations=1, rng_seed=3)
        outputs, reports = run_snowball(seed_dataset(), corpus, suite, cfg)
        assert len(outputs) == 1

        expected = Dataset()
        for doc in corpus:
            candidates = cap_candidates(
                extract(doc, suite.extractor), cfg.max_candidates_per_doc
            )
            pairs = generate_questions(doc, candidates, suite.generator, cfg.tags)
            for ex in filter_document(doc, pairs, suite.filter, 1):
                expected.add(ex, context=doc.text)
        assert outputs[0] == expected

    def test_merge_is_monotonic(self):
        corpus = synthetic_corpus(10)
        seed = seed_dataset()
        cfg = SnowballConfig(iterations=2, rng_seed=3, seed_update=SeedUpdate.MERGE)
        outputs, reports = run_snowball(seed, corpus, counting_suite(), cfg)
        assert all(len(output) > 0 for output in outputs)
        # seed only ever grows under merge
        assert reports[0].output_size + len(seed) >= len(seed)

    def test_fit_ledger_with_freeze(self):
        suite = counting_suite()
        cfg = SnowballConfig(iterations=3, rng_seed=1, freeze_ae_qg_after_first=True)
        run_snowball(seed_dataset(), synthetic_corpus(9), suite, cfg)
        assert suite.extractor.fit_calls == 1
        assert suite.generator.fit_calls == 1
        assert suite.filter.fit_calls == 3

    def test_fit_ledger_without_freeze(self):
        suite = counting_suite()
        cfg = SnowballConfig(iterations=3, rng_seed=1, freeze_ae_qg_after_first=False)
        run_snowball(seed_dataset(), synthetic_corpus(9), suite, cfg)
        assert suite.extractor.fit_calls == 3
        assert suite.generator.fit_calls == 3
        assert suite.filter.fit_calls == 3

    def test_iteration_stamps(self):
        cfg = SnowballConfig(iterations=3, rng_seed=1)
        outputs, _ = run_snowball(
            seed_dataset(), synthetic_corpus(9), counting_suite(), cfg
        )
        for index, output in enumerate(outputs, start=1):
            assert all(ex.iteration == index for ex in output)

    def test_replace_strategy(self):
        corpus = synthetic_corpus(6)
        cfg = SnowballConfig(
            iterations=2, rng_seed=1, seed_update=SeedUpdate.REPLACE
        )
        outputs, _ = run_snowball(seed_dataset(), corpus, counting_suite(), cfg)
        assert len(outputs) == 2

    def test_reports_are_consistent(self):
        cfg = SnowballConfig(iterations=2, rng_seed=4)
        outputs, reports = run_snowball(
            seed_dataset(), synthetic_corpus(10), counting_suite(), cfg
        )
        for output, report in zip(outputs, reports):
            counts = report.decision_counts
            assert report.output_size == len(output)
            assert report.output_size == counts["kept_exact"] + counts["combined"]
            assert sum(counts.values()) == report.questions_generated

    def test_empty_seed_rejected(self):
        with pytest.raises(InvalidSeed):
            run_snowball(
                Dataset(), synthetic_corpus(3), counting_suite(), SnowballConfig(iterations=1)
            )

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpus):
            run_snowball(seed_dataset(), [], counting_suite(), SnowballConfig(iterations=1))

    def test_parallelism_matches_serial(self):
        corpus = synthetic_corpus(12)
        serial_cfg = SnowballConfig(iterations=2, rng_seed=6, parallelism=1)
        parallel_cfg = SnowballConfig(iterations=2, rng_seed=6, parallelism=4)
        serial_out, _ = run_snowball(seed_dataset(), corpus, counting_suite(), serial_cfg)
        parallel_out, _ = run_snowball(
            seed_dataset(), corpus, counting_suite(), parallel_cfg
        )
        assert serial_out == parallel_out

    def test_single_threaded_backend_serialized(self):
        import threading

        lock_violations = []

        class SingleThreadedExtractor(CountingExtractor):
            def __init__(self):
                super().__init__()
                self.concurrent_safe = False
                self._busy = threading.Lock()

            def label(self, doc):
                if not self._busy.acquire(blocking=False):
                    lock_violations.append(doc.id)
                    raise RuntimeError("concurrent call to single-threaded backend")
                try:
                    return super().label(doc)
                finally:
                    self._busy.release()

        suite = BackendSuite(
            extractor=SingleThreadedExtractor(),
            generator=CountingGenerator(),
            filter=CountingFilter(),
        )
        cfg = SnowballConfig(iterations=1, rng_seed=2, parallelism=8)
        run_snowball(seed_dataset(), synthetic_corpus(20), suite, cfg)
        assert lock_violations == []


class TestCheckpointResume:
    def test_resume_skips_completed_iterations(self, tmp_path):
        corpus = synthetic_corpus(9)
        cfg = SnowballConfig(iterations=3, rng_seed=8)

        full_dir = tmp_path / "full"
        full_out, _ = run_snowball(
            seed_dataset(), corpus, counting_suite(), cfg, checkpoint_dir=full_dir
        )

        class FailsAtIterationTwo(CountingFilter):
            def fit(self, seed):
                super().fit(seed)
                if self.fit_calls == 2:
                    raise BackendFailure("injected fit failure")

        resumable_dir = tmp_path / "resumable"
        failing_suite = BackendSuite(
            extractor=CountingExtractor(),
            generator=CountingGenerator(),
            filter=FailsAtIterationTwo(),
        )
        with pytest.raises(BackendFailure):
            run_snowball(
                seed_dataset(), corpus, failing_suite, cfg, checkpoint_dir=resumable_dir
            )
        assert (resumable_dir / "iter_001" / "DONE").exists()
        assert not (resumable_dir / "iter_002" / "DONE").exists()

        resumed_suite = counting_suite()
        resumed_out, _ = run_snowball(
            seed_dataset(), corpus, resumed_suite, cfg, checkpoint_dir=resumable_dir
        )
        assert resumed_out == full_out
        # the resumed process re-fits the filter only for iterations 2 and 3
        assert resumed_suite.filter.fit_calls == 2
        assert resumed_suite.extractor.fit_calls == 0

    def test_completed_run_is_a_no_op_on_rerun(self, tmp_path):
        corpus = synthetic_corpus(6)
        cfg = SnowballConfig(iterations=2, rng_seed=8)
        out_dir = tmp_path / "ck"
        first, _ = run_snowball(
            seed_dataset(), corpus, counting_suite(), cfg, checkpoint_dir=out_dir
        )
        suite = counting_suite()
        second, _ = run_snowball(
            seed_dataset(), corpus, suite, cfg, checkpoint_dir=out_dir
        )
        assert second == first
        assert suite.filter.fit_calls == 0

    def test_mismatched_checkpoint_rejected(self, tmp_path):
        cfg = SnowballConfig(iterations=2, rng_seed=8)
        out_dir = tmp_path / "ck"
        run_snowball(
            seed_dataset(), synthetic_corpus(6), counting_suite(), cfg, checkpoint_dir=out_dir
        )
        with pytest.raises(CheckpointError):
            run_snowball(
                seed_dataset(),
                synthetic_corpus(7),
                counting_suite(),
                cfg,
                checkpoint_dir=out_dir,
            )


class TestDatasetDiff:
    def test_equal_datasets(self):
        rng = random.Random(2)
        ds = random_dataset(rng, 10)
        a_minus_b, b_minus_a, same, diff = dataset_diff(ds, ds)
        assert len(a_minus_b) == 0
        assert len(b_minus_a) == 0
        assert diff == []
        assert same == ds

    def test_disjoint_keys(self):
        rng = random.Random(3)
        a = random_dataset(rng, 6, doc_prefix="a")
        b = random_dataset(rng, 4, doc_prefix="b")
        a_minus_b, b_minus_a, same, diff = dataset_diff(a, b)
        assert len(a_minus_b) == len(a)
        assert len(b_minus_a) == len(b)
        assert len(same) == 0
        assert diff == []

    def test_set_identity_on_random_pairs(self):
        rng = random.Random(4)
        for trial in range(30):
            a = random_dataset(rng, rng.randint(0, 15), doc_prefix=f"s{trial}-")
            b = Dataset()
            for ex in a:
                if rng.random() < 0.5:
                    # keep the key, maybe change the answer
                    if rng.random() < 0.5:
                        b.add(ex, context=a.context_for(ex.document_id))
                    else:
                        doc = make_doc(a.context_for(ex.document_id), ex.document_id)
                        end = ex.answer.span.end
                        start = ex.answer.span.start
                        new_start = start - 1 if start > 0 else start
                        new_end = end + 1 if end < len(doc.text) else end
                        if (new_start, new_end) == (start, end):
                            b.add(ex, context=doc.text)
                        else:
                            b.add(
                                example_for(
                                    doc, new_start, new_end, ex.question,
                                    ex.provenance, ex.iteration,
                                ),
                                context=doc.text,
                            )
            a_minus_b, b_minus_a, same, diff = dataset_diff(a, b)
            assert len(same) + len(diff) + len(a_minus_b) == len(a)
            assert len(same) + len(diff) + len(b_minus_a) == len(b)


class TestSampleHumanEvalPairs:
    def _pair_datasets(self, n: int):
        a = Dataset()
        b = Dataset()
        for i in range(n):
            doc = make_doc(f"alpha beta gamma delta {i}", f"d{i}")
            a.add(example_for(doc, 0, 5, f"q{i}"), context=doc.text)
            b.add(example_for(doc, 6, 10, f"q{i}"), context=doc.text)
        return a, b

    def test_zero_requested(self):
        a, b = self._pair_datasets(4)
        assert sample_human_eval_pairs(a, b, 0, rng_seed=1) == []

    def test_full_eligible_count(self):
        a, b = self._pair_datasets(5)
        pairs = sample_human_eval_pairs(a, b, 5, rng_seed=1)
        assert len(pairs) == 5

    def test_deterministic_under_seed(self):
        a, b = self._pair_datasets(10)
        first = sample_human_eval_pairs(a, b, 4, rng_seed=42)
        second = sample_human_eval_pairs(a, b, 4, rng_seed=42)
        assert first == second

    def test_not_enough_pairs(self):
        a, b = self._pair_datasets(2)
        with pytest.raises(NotEnoughPairs) as excinfo:
            sample_human_eval_pairs(a, b, 5, rng_seed=1)
        assert excinfo.value.available == 2

    def test_sampled_pairs_share_key_and_differ_in_answer(self):
        a, b = self._pair_datasets(10)
        for ex_a, ex_b in sample_human_eval_pairs(a, b, 6, rng_seed=3):
            assert ex_a.key == ex_b.key
            assert ex_a.answer.span != ex_b.answer.span
