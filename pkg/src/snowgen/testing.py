"""Test doubles: an in-process stub inference server and fit-counting backends.

The stub speaks the wire protocol of PROTOCOL.md and mirrors the reference
backends, so the HTTP adapters can be exercised end-to-end without a model
server. Fault injection covers transient 5xx, malformed bodies, and
shape-violating responses.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .extraction import HeuristicExtractor
from .filtering import FragmentMatchFilter
from .generation import TagConfig, TemplateGenerator
from .types import Dataset, Document


@dataclass
class FaultPlan:
    """Mutable fault switches, consumed request by request."""

    fail_next: int = 0  # respond with error_status this many times
    error_status: int = 503
    malformed_next: int = 0  # respond with non-JSON bodies this many times
    short_label_rows: int = 0  # drop one label from each row this many times
    bad_span_next: int = 0  # answer with an inverted span this many times
    fail_fit_next: int = 0  # fail only /fit requests this many times

    def take(self, attr: str) -> bool:
        remaining = getattr(self, attr)
        if remaining > 0:
            setattr(self, attr, remaining - 1)
            return True
        return False


@dataclass
class RequestRecord:
    path: str
    payload: dict


class _StubHandler(BaseHTTPRequestHandler):
    server: "_Server"

    def log_message(self, format: str, *args) -> None:  # noqa: A002 - stdlib signature
        pass

    def _reply(self, status: int, body: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self) -> None:  # noqa: N802 - stdlib naming
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError:
            self._reply(400, b'{"error": "bad json"}')
            return

        stub = self.server.stub
        parsed = urlparse(self.path)
        path = parsed.path
        with stub.lock:
            stub.requests.append(RequestRecord(path=path, payload=payload))
            faults = stub.faults
            if path != "/fit" and faults.take("fail_next"):
                self._reply(faults.error_status, b'{"error": "injected"}')
                return
            if path == "/fit" and faults.take("fail_fit_next"):
                self._reply(faults.error_status, b'{"error": "injected"}')
                return
            if faults.take("malformed_next"):
                self._reply(200, b"this is not json")
                return
            short_rows = path == "/label" and faults.take("short_label_rows")

        if path == "/label":
            rows = []
            for index, text in enumerate(payload["texts"]):
                doc = Document(id=f"req{index}", text=text)
                row = [int(flag) for flag in stub.extractor.label(doc)]
                if short_rows and row:
                    row = row[:-1]
                rows.append(row)
            body = {"labels": rows}
        elif path == "/generate":
            body = {"questions": [stub.generator.generate(t) for t in payload["texts"]]}
        elif path == "/answer":
            answers = []
            for index, pair in enumerate(payload["pairs"]):
                doc = Document(id=f"req{index}", text=pair["context"])
                found = stub.filter.answer(doc, pair["question"])
                if found is None:
                    answers.append({"abstain": True})
                else:
                    answers.append({"start": found.span.start, "end": found.span.end})
            body = {"answers": answers}
        elif path == "/fit":
            role = parse_qs(parsed.query).get("role", [""])[0]
            with stub.lock:
                stub.fit_roles.append(role)
            body = {"ok": True}
        else:
            self._reply(404, b'{"error": "unknown path"}')
            return
        self._reply(200, json.dumps(body).encode("utf-8"))


class _Server(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, handler, stub: "StubInferenceServer"):
        super().__init__(address, handler)
        self.stub = stub


class StubInferenceServer:
    """In-process inference service mirroring the reference backends.

    Usage:
        with StubInferenceServer() as stub:
            config = EndpointConfig(base_url=stub.base_url, ...)
    """

    def __init__(self, tags: TagConfig = TagConfig()):
        self.extractor = HeuristicExtractor()
        self.generator = TemplateGenerator(tags)
        self.filter = FragmentMatchFilter()
        self.faults = FaultPlan()
        self.requests: list[RequestRecord] = []
        self.fit_roles: list[str] = []
        self.lock = threading.Lock()
        self._server: _Server | None = None
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        assert self._server is not None, "server is not running"
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "StubInferenceServer":
        self._server = _Server(("127.0.0.1", 0), _StubHandler, self)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "StubInferenceServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.stop()

    def requests_for(self, path: str) -> list[RequestRecord]:
        with self.lock:
            return [r for r in self.requests if r.path == path]

    def clear_log(self) -> None:
        with self.lock:
            self.requests.clear()
            self.fit_roles.clear()


class CountingExtractor:
    """Wraps an extractor backend, counting fit calls."""

    def __init__(self, inner=None):
        self.inner = inner or HeuristicExtractor()
        self.fit_calls = 0
        self.concurrent_safe = getattr(self.inner, "concurrent_safe", True)

    def label(self, doc: Document):
        return self.inner.label(doc)

    def fit(self, seed: Dataset) -> None:
        self.fit_calls += 1
        self.inner.fit(seed)


class CountingGenerator:
    """Wraps a generator backend, counting fit calls."""

    def __init__(self, inner=None):
        self.inner = inner or TemplateGenerator()
        self.fit_calls = 0
        self.concurrent_safe = getattr(self.inner, "concurrent_safe", True)

    def generate(self, tagged_text: str) -> str:
        return self.inner.generate(tagged_text)

    def fit(self, seed: Dataset) -> None:
        self.fit_calls += 1
        self.inner.fit(seed)


class CountingFilter:
    """Wraps a filter backend, counting fit calls."""

    def __init__(self, inner=None):
        self.inner = inner or FragmentMatchFilter()
        self.fit_calls = 0
        self.concurrent_safe = getattr(self.inner, "concurrent_safe", True)

    def answer(self, doc: Document, question: str):
        return self.inner.answer(doc, question)

    def fit(self, seed: Dataset) -> None:
        self.fit_calls += 1
        self.inner.fit(seed)
