"""Command-line entry point: per-stage commands and the full iterative run.

Exit codes: 0 success, 1 runtime/backend failure, 2 usage or input parse
error. Logs go to stderr; reports go to stdout.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .client import EndpointConfig, http_backend_suite
from .dataset_io import (
    export_review_sheet,
    import_review_sheet,
    load_corpus,
    load_dataset,
    save_dataset,
)
from .errors import (
    DuplicateId,
    EmptyCorpus,
    InvalidSeed,
    NotEnoughPairs,
    ParseError,
    SnowgenError,
    TagCollision,
)
from .extraction import HeuristicExtractor, cap_candidates, extract
from .filtering import FragmentMatchFilter, filter_document_detailed
from .generation import TagConfig, TemplateGenerator, generate_questions
from .metrics import Tokenizer, score_dataset
from .orchestrator import (
    BackendSuite,
    SeedUpdate,
    SnowballConfig,
    dataset_diff,
    run_snowball,
    sample_human_eval_pairs,
)
from .types import Dataset, Document, Span, make_candidate

logger = logging.getLogger(__name__)

# Errors caused by bad input or usage rather than runtime failure.
_USAGE_ERRORS = (
    ParseError,
    DuplicateId,
    EmptyCorpus,
    InvalidSeed,
    NotEnoughPairs,
    FileNotFoundError,
    json.JSONDecodeError,
)

_CONFIG_DEFAULTS = {
    "iterations": 1,
    "seed_update": "merge",
    "freeze_ae_qg_after_first": True,
    "rng_seed": 0,
    "max_candidates_per_doc": 16,
    "parallelism": 1,
    "backends": {
        "extractor": "reference",
        "generator": "reference",
        "filter": "reference",
    },
    "open_tag": "<ANS>",
    "close_tag": "</ANS>",
}


def _resolve_backends(spec: dict[str, str], tags: TagConfig) -> BackendSuite:
    """Map per-role selections ("reference" or an http(s) URL) to backends."""
    http_suites: dict[str, tuple] = {}

    def _role(role: str, index: int):
        choice = spec.get(role, "reference")
        if choice == "reference":
            if role == "extractor":
                return HeuristicExtractor()
            if role == "generator":
                return TemplateGenerator(tags)
            return FragmentMatchFilter()
        if choice.startswith(("http://", "https://")):
            if choice not in http_suites:
                http_suites[choice] = http_backend_suite(EndpointConfig(base_url=choice))
            return http_suites[choice][index]
        raise ParseError(
            f"backend for {role!r} must be 'reference' or an http(s) URL, got {choice!r}"
        )

    return BackendSuite(
        extractor=_role("extractor", 0),
        generator=_role("generator", 1),
        filter=_role("filter", 2),
    )


def _single_backend(choice: str, role: str, tags: TagConfig):
    suite = _resolve_backends({role: choice}, tags)
    return getattr(suite, role)


def _write_jsonl(path: str, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False))
            handle.write("\n")


def _read_jsonl(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}", line=lineno) from exc
    return records


def _cmd_extract(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    backend = _single_backend(args.backend, "extractor", TagConfig())
    records = []
    for doc in corpus:
        candidates = cap_candidates(extract(doc, backend), args.max_candidates)
        records.append(
            {"id": doc.id, "spans": [[c.span.start, c.span.end] for c in candidates]}
        )
    _write_jsonl(args.out, records)
    print(f"extracted candidates for {len(records)} documents -> {args.out}")
    return 0


def _cmd_generate(args: argparse.Namespace) -> int:
    corpus = {doc.id: doc for doc in load_corpus(args.corpus)}
    tags = TagConfig(args.open_tag, args.close_tag)
    backend = _single_backend(args.backend, "generator", tags)
    records = []
    for entry in _read_jsonl(args.candidates):
        doc = corpus.get(entry.get("id"))
        if doc is None:
            raise ParseError(f"candidate entry names unknown document {entry.get('id')!r}")
        candidates = [
            make_candidate(doc, Span(start, end)) for start, end in entry.get("spans", [])
        ]
        try:
            pairs = generate_questions(doc, candidates, backend, tags)
        except TagCollision as exc:
            logger.warning("skipping document %r: %s", doc.id, exc)
            continue
        for candidate, question in pairs:
            records.append(
                {
                    "id": doc.id,
                    "span": [candidate.span.start, candidate.span.end],
                    "question": question,
                }
            )
    _write_jsonl(args.out, records)
    print(f"generated {len(records)} questions -> {args.out}")
    return 0


def _cmd_filter(args: argparse.Namespace) -> int:
    corpus = {doc.id: doc for doc in load_corpus(args.corpus)}
    backend = _single_backend(args.backend, "filter", TagConfig())
    by_doc: dict[str, list[tuple]] = {}
    for entry in _read_jsonl(args.qapairs):
        doc = corpus.get(entry.get("id"))
        if doc is None:
            raise ParseError(f"qa pair names unknown document {entry.get('id')!r}")
        start, end = entry["span"]
        by_doc.setdefault(doc.id, []).append(
            (make_candidate(doc, Span(start, end)), entry["question"])
        )
    dataset = Dataset()
    totals: dict[str, int] = {}
    for doc_id, pairs in by_doc.items():
        doc = corpus[doc_id]
        generated, counts = filter_document_detailed(doc, pairs, backend, args.iteration)
        for key, value in counts.items():
            totals[key] = totals.get(key, 0) + value
        for example in generated:
            dataset.add(example, context=doc.text)
    save_dataset(dataset, args.out)
    report = {"pairs": sum(totals.values()), "decisions": totals, "kept": len(dataset)}
    if args.report:
        Path(args.report).write_text(
            json.dumps(report, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
    print(json.dumps(report, ensure_ascii=False))
    return 0


def _load_run_config(args: argparse.Namespace) -> dict:
    config = dict(_CONFIG_DEFAULTS)
    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            loaded = json.load(handle)
        if not isinstance(loaded, dict):
            raise ParseError(f"{args.config} must hold a JSON object")
        backends = dict(config["backends"])
        backends.update(loaded.pop("backends", {}))
        config.update(loaded)
        config["backends"] = backends
    for key in (
        "seed",
        "corpus",
        "checkpoint_dir",
        "iterations",
        "seed_update",
        "rng_seed",
        "max_candidates_per_doc",
        "parallelism",
        "open_tag",
        "close_tag",
    ):
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    if args.freeze_ae_qg_after_first is not None:
        config["freeze_ae_qg_after_first"] = args.freeze_ae_qg_after_first
    for role in ("extractor", "generator", "filter"):
        value = getattr(args, f"{role}_backend", None)
        if value is not None:
            config["backends"][role] = value
    for required in ("seed", "corpus", "checkpoint_dir"):
        if not config.get(required):
            raise ParseError(f"run config is missing {required!r}")
    return config


def _cmd_snowball(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    tags = TagConfig(config["open_tag"], config["close_tag"])
    cfg = SnowballConfig(
        iterations=int(config["iterations"]),
        rng_seed=int(config["rng_seed"]),
        seed_update=SeedUpdate(config["seed_update"]),
        freeze_ae_qg_after_first=bool(config["freeze_ae_qg_after_first"]),
        max_candidates_per_doc=int(config["max_candidates_per_doc"]),
        parallelism=int(config["parallelism"]),
        tags=tags,
    )
    seed = load_dataset(config["seed"])
    corpus = load_corpus(config["corpus"])
    backends = _resolve_backends(config["backends"], tags)

    checkpoint_dir = Path(config["checkpoint_dir"])
    checkpoint_dir.mkdir(parents=True, exist_ok=True)
    (checkpoint_dir / "config.json").write_text(
        json.dumps(config, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )

    outputs, reports = run_snowball(seed, corpus, backends, cfg, checkpoint_dir)

    header = (
        f"{'iter':>4} {'docs':>6} {'cands':>7} {'questions':>9} "
        f"{'kept':>6} {'combined':>8} {'discarded':>9} {'abstained':>9} "
        f"{'output':>7} {'seconds':>8}"
    )
    print(header)
    for report in reports:
        counts = report.decision_counts
        print(
            f"{report.iteration:>4} {report.docs_processed:>6} "
            f"{report.candidates_extracted:>7} {report.questions_generated:>9} "
            f"{counts['kept_exact']:>6} {counts['combined']:>8} "
            f"{counts['discarded']:>9} {counts['abstained']:>9} "
            f"{report.output_size:>7} {report.wall_time:>8.2f}"
        )
    total = sum(len(output) for output in outputs)
    print(f"generated {total} examples over {len(outputs)} iterations -> {checkpoint_dir}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    gold = load_dataset(args.gold)
    with open(args.pred, encoding="utf-8") as handle:
        raw = json.load(handle)
    if not isinstance(raw, list):
        raise ParseError(f"{args.pred} must hold a JSON list of prediction records")
    predictions = {}
    for record in raw:
        try:
            predictions[(record["document_id"], record["question"])] = record["prediction"]
        except (TypeError, KeyError) as exc:
            raise ParseError(
                "prediction records need document_id, question, prediction"
            ) from exc
    report = score_dataset(predictions, gold, Tokenizer(args.tokenizer))
    print(str(report))
    return 0


def _cmd_diff(args: argparse.Namespace) -> int:
    a = load_dataset(args.a)
    b = load_dataset(args.b)
    a_minus_b, b_minus_a, same_answer, diff_answer = dataset_diff(a, b)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_dataset(a_minus_b, out_dir / "a_minus_b.json")
    save_dataset(b_minus_a, out_dir / "b_minus_a.json")
    save_dataset(same_answer, out_dir / "intersection_same_answer.json")
    pairs_payload = [
        {
            "document_id": ex_a.document_id,
            "question": ex_a.question,
            "answer_a": {
                "text": ex_a.answer.text,
                "start": ex_a.answer.span.start,
                "end": ex_a.answer.span.end,
            },
            "answer_b": {
                "text": ex_b.answer.text,
                "start": ex_b.answer.span.start,
                "end": ex_b.answer.span.end,
            },
        }
        for ex_a, ex_b in diff_answer
    ]
    (out_dir / "intersection_diff_answer.json").write_text(
        json.dumps(pairs_payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    summary = {
        "a_minus_b": len(a_minus_b),
        "b_minus_a": len(b_minus_a),
        "intersection_same_answer": len(same_answer),
        "intersection_diff_answer": len(diff_answer),
    }
    print(json.dumps(summary))
    return 0


def _cmd_sample_review(args: argparse.Namespace) -> int:
    a = load_dataset(args.a)
    b = load_dataset(args.b)
    pairs = sample_human_eval_pairs(a, b, args.n, args.seed)
    contexts = {**b.contexts, **a.contexts}
    export_review_sheet(pairs, args.out, contexts)
    print(f"wrote {len(pairs)} review pairs -> {args.out}")
    return 0


def _cmd_tally_review(args: argparse.Namespace) -> int:
    tallies = import_review_sheet(args.sheet)
    print(json.dumps(tallies))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snowgen",
        description="Iterative QA data generation: extract, question, filter, reseed.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    commands = parser.add_subparsers(dest="command", required=True)

    extract_cmd = commands.add_parser("extract", help="extract answer candidates")
    extract_cmd.add_argument("--corpus", required=True, help="JSONL corpus of id/text")
    extract_cmd.add_argument("--backend", default="reference")
    extract_cmd.add_argument("--out", required=True, help="candidates JSONL output")
    extract_cmd.add_argument("--max-candidates", type=int, default=16)
    extract_cmd.set_defaults(func=_cmd_extract)

    generate_cmd = commands.add_parser("generate", help="generate questions")
    generate_cmd.add_argument("--corpus", required=True)
    generate_cmd.add_argument("--candidates", required=True, help="extract output JSONL")
    generate_cmd.add_argument("--backend", default="reference")
    generate_cmd.add_argument("--out", required=True, help="qa pairs JSONL output")
    generate_cmd.add_argument("--open-tag", default="<ANS>")
    generate_cmd.add_argument("--close-tag", default="</ANS>")
    generate_cmd.set_defaults(func=_cmd_generate)

    filter_cmd = commands.add_parser("filter", help="filter qa pairs")
    filter_cmd.add_argument("--corpus", required=True)
    filter_cmd.add_argument("--qapairs", required=True, help="generate output JSONL")
    filter_cmd.add_argument("--backend", default="reference")
    filter_cmd.add_argument("--out", required=True, help="dataset JSON output")
    filter_cmd.add_argument("--report", help="decision count report path")
    filter_cmd.add_argument("--iteration", type=int, default=1)
    filter_cmd.set_defaults(func=_cmd_filter)

    snowball_cmd = commands.add_parser("snowball", help="run the full iterative loop")
    snowball_cmd.add_argument("--config", help="JSON run config")
    snowball_cmd.add_argument("--seed", help="seed dataset path")
    snowball_cmd.add_argument("--corpus", help="corpus JSONL path")
    snowball_cmd.add_argument("--checkpoint-dir", dest="checkpoint_dir")
    snowball_cmd.add_argument("--iterations", type=int)
    snowball_cmd.add_argument("--seed-update", dest="seed_update", choices=["merge", "replace"])
    snowball_cmd.add_argument("--rng-seed", dest="rng_seed", type=int)
    snowball_cmd.add_argument(
        "--max-candidates-per-doc", dest="max_candidates_per_doc", type=int
    )
    snowball_cmd.add_argument("--parallelism", type=int)
    snowball_cmd.add_argument(
        "--freeze-ae-qg-after-first",
        dest="freeze_ae_qg_after_first",
        action="store_true",
        default=None,
    )
    snowball_cmd.add_argument(
        "--no-freeze-ae-qg-after-first",
        dest="freeze_ae_qg_after_first",
        action="store_false",
    )
    snowball_cmd.add_argument("--extractor-backend", dest="extractor_backend")
    snowball_cmd.add_argument("--generator-backend", dest="generator_backend")
    snowball_cmd.add_argument("--filter-backend", dest="filter_backend")
    snowball_cmd.add_argument("--open-tag", dest="open_tag")
    snowball_cmd.add_argument("--close-tag", dest="close_tag")
    snowball_cmd.set_defaults(func=_cmd_snowball)

    eval_cmd = commands.add_parser("eval", help="score predictions against a dataset")
    eval_cmd.add_argument("--pred", required=True, help="JSON list of prediction records")
    eval_cmd.add_argument("--gold", required=True, help="gold dataset JSON")
    eval_cmd.add_argument(
        "--tokenizer",
        default="auto",
        choices=[mode.value for mode in Tokenizer],
    )
    eval_cmd.set_defaults(func=_cmd_eval)

    diff_cmd = commands.add_parser("diff", help="compare two datasets key-wise")
    diff_cmd.add_argument("--a", required=True)
    diff_cmd.add_argument("--b", required=True)
    diff_cmd.add_argument("--out-dir", dest="out_dir", required=True)
    diff_cmd.set_defaults(func=_cmd_diff)

    review_cmd = commands.add_parser(
        "sample-review", help="sample same-question different-answer pairs"
    )
    review_cmd.add_argument("--a", required=True)
    review_cmd.add_argument("--b", required=True)
    review_cmd.add_argument("--n", type=int, required=True)
    review_cmd.add_argument("--seed", type=int, default=0)
    review_cmd.add_argument("--out", required=True, help="review sheet TSV output")
    review_cmd.set_defaults(func=_cmd_sample_review)

    tally_cmd = commands.add_parser("tally-review", help="tally a filled review sheet")
    tally_cmd.add_argument("--sheet", required=True)
    tally_cmd.set_defaults(func=_cmd_tally_review)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SnowgenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
