"""Iterative QA data generation: extract answers, generate questions, filter, reseed."""

from .errors import (
    BackendFailure,
    CheckpointError,
    DuplicateId,
    DuplicateKey,
    EmptyCorpus,
    EmptySpan,
    InvalidSeed,
    LengthMismatch,
    NotCombinable,
    NotEnoughPairs,
    OutOfBounds,
    ParseError,
    ProtocolError,
    SnowgenError,
    TagCollision,
)
from .extraction import (
    ExtractorBackend,
    HeuristicExtractor,
    cap_candidates,
    extract,
    merge_runs,
    post_process,
)
from .filtering import (
    DecisionKind,
    FilterBackend,
    FilterDecision,
    FragmentMatchFilter,
    filter_document,
    filter_pair,
    locate_answer,
)
from .generation import (
    GeneratorBackend,
    TagConfig,
    TemplateGenerator,
    generate_questions,
    insert_tags,
)
from .metrics import ScoreReport, Tokenizer, exact_match, f1, normalize, score_dataset
from .orchestrator import (
    BackendSuite,
    IterationReport,
    SeedUpdate,
    SnowballConfig,
    dataset_diff,
    partition,
    run_snowball,
    sample_human_eval_pairs,
)
from .spans import OverlapClass, classify, combine
from .types import (
    AnswerCandidate,
    Dataset,
    Document,
    DuplicatePolicy,
    Provenance,
    QAExample,
    Span,
    make_candidate,
)

__version__ = "0.1.0"

__all__ = [
    "AnswerCandidate",
    "BackendFailure",
    "BackendSuite",
    "CheckpointError",
    "Dataset",
    "DecisionKind",
    "Document",
    "DuplicateId",
    "DuplicateKey",
    "DuplicatePolicy",
    "EmptyCorpus",
    "EmptySpan",
    "ExtractorBackend",
    "FilterBackend",
    "FilterDecision",
    "FragmentMatchFilter",
    "GeneratorBackend",
    "HeuristicExtractor",
    "InvalidSeed",
    "IterationReport",
    "LengthMismatch",
    "NotCombinable",
    "NotEnoughPairs",
    "OutOfBounds",
    "OverlapClass",
    "ParseError",
    "ProtocolError",
    "Provenance",
    "QAExample",
    "ScoreReport",
    "SeedUpdate",
    "SnowballConfig",
    "SnowgenError",
    "Span",
    "TagCollision",
    "TagConfig",
    "TemplateGenerator",
    "Tokenizer",
    "cap_candidates",
    "classify",
    "combine",
    "dataset_diff",
    "exact_match",
    "extract",
    "f1",
    "filter_document",
    "filter_pair",
    "generate_questions",
    "insert_tags",
    "locate_answer",
    "make_candidate",
    "merge_runs",
    "normalize",
    "partition",
    "post_process",
    "run_snowball",
    "sample_human_eval_pairs",
    "score_dataset",
]
