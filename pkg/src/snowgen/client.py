"""HTTP adapters for the three backend roles, with batching and retry.

Wire protocol (see PROTOCOL.md): all offsets on the wire are Unicode
scalar-value counts, matching the in-memory model. Timeouts and 5xx responses
are retried with exponential backoff; protocol violations (shape or bounds)
surface as ProtocolError and are never retried.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import requests

from .dataset_io import to_squad_dict
from .errors import BackendFailure, InvalidSeed, ProtocolError
from .types import AnswerCandidate, Dataset, Document, Span, make_candidate

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class EndpointConfig:
    """Where and how to reach the inference service."""

    base_url: str
    label_path: str = "/label"
    generate_path: str = "/generate"
    answer_path: str = "/answer"
    fit_path: str = "/fit"
    timeout: float = 30.0
    max_retries: int = 3
    backoff_initial: float = 0.5
    backoff_factor: float = 2.0
    batch_size: int = 16
    auth_token: str | None = None
    max_in_flight: int = 8

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max retries must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max in-flight requests must be >= 1")


def _chunks(items: Sequence, size: int) -> Iterable[Sequence]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


class InferenceClient:
    """Batched JSON-over-HTTP client for one inference service.

    Safe for concurrent batch calls up to the configured in-flight cap. fit
    is exclusive with inference: it waits for in-flight requests to drain and
    blocks new ones while running (the orchestrator barrier enforces the same
    thing at a higher level; the client re-checks).
    """

    def __init__(self, config: EndpointConfig, session: requests.Session | None = None):
        self.config = config
        self._session = session or requests.Session()
        self._inflight = threading.Semaphore(config.max_in_flight)
        self._fit_lock = threading.Lock()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.auth_token:
            headers["Authorization"] = f"Bearer {self.config.auth_token}"
        return headers

    def _post(self, path: str, payload: dict, *, params: dict | None = None) -> dict:
        """POST one JSON body, retrying timeouts and 5xx with backoff."""
        url = self.config.base_url.rstrip("/") + path
        delay = self.config.backoff_initial
        attempts = self.config.max_retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt > 0:
                time.sleep(delay)
                delay *= self.config.backoff_factor
            try:
                response = self._session.post(
                    url,
                    data=json.dumps(payload).encode("utf-8"),
                    headers=self._headers(),
                    params=params,
                    timeout=self.config.timeout,
                )
            except (requests.Timeout, requests.ConnectionError) as exc:
                last_error = exc
                logger.warning("attempt %d against %s failed: %s", attempt + 1, url, exc)
                continue
            if response.status_code >= 500:
                last_error = BackendFailure(
                    f"{url} returned {response.status_code}"
                )
                logger.warning(
                    "attempt %d against %s: HTTP %d", attempt + 1, url, response.status_code
                )
                continue
            if response.status_code != 200:
                raise BackendFailure(
                    f"{url} returned {response.status_code}: {response.text[:200]}"
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise ProtocolError(f"{url} returned non-JSON body") from exc
            if not isinstance(body, dict):
                raise ProtocolError(f"{url} returned a non-object body")
            return body
        raise BackendFailure(
            f"{url} failed after {attempts} attempts: {last_error}"
        ) from last_error

    def _inference_post(self, path: str, payload: dict) -> dict:
        # A fit in progress holds the lock; piggyback on it so inference
        # cannot interleave with fit.
        with self._fit_lock:
            pass
        with self._inflight:
            return self._post(path, payload)

    def label_batch(self, documents: Sequence[Document]) -> list[list[bool]]:
        """Label documents; one 0/1 row per document, row length checked."""
        results: list[list[bool]] = []
        for chunk in _chunks(documents, self.config.batch_size):
            body = self._inference_post(
                self.config.label_path, {"texts": [doc.text for doc in chunk]}
            )
            rows = body.get("labels")
            if not isinstance(rows, list) or len(rows) != len(chunk):
                raise ProtocolError(
                    f"label response carries {len(rows) if isinstance(rows, list) else 'no'} "
                    f"rows for {len(chunk)} documents"
                )
            for doc, row in zip(chunk, rows):
                if not isinstance(row, list) or len(row) != len(doc.text):
                    raise ProtocolError(
                        f"label row length {len(row) if isinstance(row, list) else 'n/a'} "
                        f"!= document {doc.id!r} length {len(doc.text)}"
                    )
                results.append([bool(flag) for flag in row])
        return results

    def generate_batch(self, tagged_texts: Sequence[str]) -> list[str]:
        """Generate one question per tagged text; empty string means declined."""
        results: list[str] = []
        for chunk in _chunks(tagged_texts, self.config.batch_size):
            body = self._inference_post(self.config.generate_path, {"texts": list(chunk)})
            questions = body.get("questions")
            if not isinstance(questions, list) or len(questions) != len(chunk):
                raise ProtocolError(
                    f"generate response carries "
                    f"{len(questions) if isinstance(questions, list) else 'no'} "
                    f"questions for {len(chunk)} texts"
                )
            for question in questions:
                if not isinstance(question, str):
                    raise ProtocolError("generate response contains a non-string question")
                results.append(question)
        return results

    def answer_batch(
        self, pairs: Sequence[tuple[str, str]]
    ) -> list[tuple[int, int] | None]:
        """Answer (context, question) pairs; None encodes abstention.

        Spans are validated against each context; an out-of-bounds or empty
        span is a protocol violation.
        """
        results: list[tuple[int, int] | None] = []
        for chunk in _chunks(pairs, self.config.batch_size):
            body = self._inference_post(
                self.config.answer_path,
                {"pairs": [{"context": c, "question": q} for c, q in chunk]},
            )
            answers = body.get("answers")
            if not isinstance(answers, list) or len(answers) != len(chunk):
                raise ProtocolError(
                    f"answer response carries "
                    f"{len(answers) if isinstance(answers, list) else 'no'} "
                    f"items for {len(chunk)} pairs"
                )
            for (context, _), item in zip(chunk, answers):
                if not isinstance(item, dict):
                    raise ProtocolError("answer response item is not an object")
                if item.get("abstain"):
                    results.append(None)
                    continue
                start, end = item.get("start"), item.get("end")
                if not isinstance(start, int) or not isinstance(end, int):
                    raise ProtocolError("answer item lacks integer start/end")
                if not 0 <= start < end <= len(context):
                    raise ProtocolError(
                        f"answer span [{start}, {end}) out of bounds for context "
                        f"of length {len(context)}"
                    )
                results.append((start, end))
        return results

    def fit(self, role: str, seed: Dataset) -> None:
        """Ship the seed set to the service for one role; waits for a 200 ack."""
        if len(seed) == 0:
            raise InvalidSeed("refusing to fit on an empty seed set")
        payload = to_squad_dict(seed)
        with self._fit_lock:
            # Drain in-flight inference before fitting.
            for _ in range(self.config.max_in_flight):
                self._inflight.acquire()
            try:
                self._post(self.config.fit_path, payload, params={"role": role})
            finally:
                for _ in range(self.config.max_in_flight):
                    self._inflight.release()


class HttpExtractorBackend:
    """ExtractorBackend over an inference service."""

    def __init__(self, client: InferenceClient):
        self.client = client
        self.concurrent_safe = True

    def label(self, doc: Document) -> list[bool]:
        return self.client.label_batch([doc])[0]

    def fit(self, seed: Dataset) -> None:
        self.client.fit("extractor", seed)


class HttpGeneratorBackend:
    """GeneratorBackend over an inference service."""

    def __init__(self, client: InferenceClient):
        self.client = client
        self.concurrent_safe = True

    def generate(self, tagged_text: str) -> str:
        return self.client.generate_batch([tagged_text])[0]

    def fit(self, seed: Dataset) -> None:
        self.client.fit("generator", seed)


class HttpFilterBackend:
    """FilterBackend over an inference service."""

    def __init__(self, client: InferenceClient):
        self.client = client
        self.concurrent_safe = True

    def answer(self, doc: Document, question: str) -> AnswerCandidate | None:
        result = self.client.answer_batch([(doc.text, question)])[0]
        if result is None:
            return None
        start, end = result
        return make_candidate(doc, Span(start, end))

    def fit(self, seed: Dataset) -> None:
        self.client.fit("filter", seed)


def http_backend_suite(config: EndpointConfig):
    """Build the three HTTP role adapters sharing one client."""
    client = InferenceClient(config)
    return (
        HttpExtractorBackend(client),
        HttpGeneratorBackend(client),
        HttpFilterBackend(client),
    )
