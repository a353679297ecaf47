import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from kgerase.corpus import SynthSpec, generate_synthetic
from kgerase.kg import Triple
from kgerase.rewriters import PatternExtractor


@pytest.fixture
def neighbour_chain():
    """The three-document de-anonymization example."""
    k1 = Triple("John Doe", "lives_next_to", "Jane Roe")
    k2 = Triple("Jane Roe", "lives_in", "TechVille")
    k3 = Triple("John Doe", "lives_in", "TechVille")
    return k1, k2, k3


@pytest.fixture
def synth_corpus(tmp_path):
    return generate_synthetic(SynthSpec(queries=4, docs_per_query=6, chains=1, decoys=1, fillers=8), 11, tmp_path / "corpus")


class MockModel:
    """Behaviour of the fake model server; tests tweak the attributes."""

    def __init__(self):
        self.fail_texts: set[str] = set()
        self.fail_status = 500
        self.answers: dict[str, str] = {}
        self.calls: list[dict] = []
        self.lock = threading.Lock()
        self.extractor = PatternExtractor()

    def handle(self, payload: dict) -> tuple[int, dict]:
        with self.lock:
            self.calls.append(payload)
        text = payload.get("text") or ""
        if text in self.fail_texts:
            return self.fail_status, {"error": "injected failure"}
        task = payload.get("task")
        if task == "rewrite":
            private = {(r["head"], r["relation"], r["tail"]) for r in payload.get("private", [])}
            kept = [
                s for s in text.split(". ") if s
                and not any(f"{h} {r} {t}" in s for h, r, t in private)
            ]
            out = ". ".join(s.rstrip(".") for s in kept)
            return 200, {"text": out + "." if out else ""}
        if task == "extract":
            return 200, {"triples": [t.to_dict() for t in sorted(self.extractor.extract(text))]}
        if task == "generate":
            return 200, {"text": self.answers.get(text, "no idea")}
        return 400, {"error": "unknown task"}


@pytest.fixture
def mock_server():
    model = MockModel()

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            try:
                payload = json.loads(self.rfile.read(length))
                status, body = model.handle(payload)
            except ValueError:
                status, body = 400, {"error": "bad json"}
            data = json.dumps(body).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    model.url = f"http://127.0.0.1:{server.server_address[1]}/"
    try:
        yield model
    finally:
        server.shutdown()
        server.server_close()
