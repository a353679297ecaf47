"""Rewriter and extractor interfaces, reference implementations, remote clients.

Remote services speak one JSON-over-HTTP protocol::

    POST {"task": "rewrite" | "extract" | "generate", "text": ..., "private": [...],
          "public": [...], "prompt": ...}
      -> {"text": ...}  or  {"triples": [...]}

Any non-200 status is a remote failure. Transport errors and 5xx responses
are retried once; 4xx responses never are.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import requests

from kgerase.corpus import RELATIONS, DocumentRecord, pattern_regex
from kgerase.errors import AlignmentGapError, KgEraseError, MalformedResponseError, RemoteFailure, SchemaViolationError
from kgerase.kg import Triple

log = logging.getLogger(__name__)

PROMPT_VERSION = "v1"


@dataclass(frozen=True)
class RewriteRequest:
    doc: DocumentRecord
    private_triples: frozenset[Triple]
    public_triples: frozenset[Triple]
    scope: str = "global"  # "global" | "per-document"


@dataclass(frozen=True)
class RewriteResult:
    doc_id: str
    rewritten_text: str
    latency: float
    rewriter_id: str


@dataclass(frozen=True)
class RewriteFailure:
    doc_id: str
    error: str
    latency: float
    rewriter_id: str


class Rewriter(Protocol):
    rewriter_id: str
    # False means the harness must serialize calls
    concurrent: bool

    def rewrite_text(self, req: RewriteRequest) -> str: ...


class Extractor(Protocol):
    def extract(self, text: str, doc_id: str | None = None) -> frozenset[Triple]: ...


# --- reference rewriters -----------------------------------------------------


class IdentityRewriter:
    rewriter_id = "identity"
    concurrent = True

    def rewrite_text(self, req: RewriteRequest) -> str:
        return req.doc.text


class RedactRewriter:
    """Total redaction: the lower-bound baseline."""

    rewriter_id = "redact"
    concurrent = True

    def rewrite_text(self, req: RewriteRequest) -> str:
        return ""


class SentenceDropRewriter:
    """Drops exactly the sentences whose aligned triples include a private one."""

    rewriter_id = "sentence-drop"
    concurrent = True

    def __init__(self, alignment: Mapping[str, Sequence[Iterable[Triple]]]) -> None:
        self.alignment = {k: [frozenset(s) for s in v] for k, v in alignment.items()}

    def rewrite_text(self, req: RewriteRequest) -> str:
        doc = req.doc
        aligned = self.alignment.get(doc.doc_id)
        if aligned is None or len(aligned) != len(doc.sentences):
            raise AlignmentGapError(
                f"alignment for {doc.doc_id!r} covers {0 if aligned is None else len(aligned)} "
                f"of {len(doc.sentences)} sentences"
            )
        kept = [s for s, ts in zip(doc.sentence_texts(), aligned) if not (ts & req.private_triples)]
        return " ".join(kept)


def sentence_drop_rewrite(req: RewriteRequest, alignment: Sequence[Iterable[Triple]]) -> RewriteResult:
    t0 = time.perf_counter()
    text = SentenceDropRewriter({req.doc.doc_id: alignment}).rewrite_text(req)
    return RewriteResult(req.doc.doc_id, text, time.perf_counter() - t0, SentenceDropRewriter.rewriter_id)


# --- prompts -----------------------------------------------------------------

_CONSTRAINTS = (
    "Remove all of the private information listed below from the document.",
    "Retain all of the public information listed below in the document.",
    "Keep the original language style of the document.",
)


def _bullets(triples: Iterable[Triple]) -> str:
    return "\n".join(f"- {t.head} | {t.relation} | {t.tail}" for t in sorted(triples))


def render_prompt(req: RewriteRequest) -> str:
    """Annotation-style rewrite prompt; bump ``PROMPT_VERSION`` when wording changes."""
    rules = "\n".join(f"{i}. {c}" for i, c in enumerate(_CONSTRAINTS, 1))
    return (
        f"[prompt {PROMPT_VERSION}]\n"
        "Rewrite the document so that:\n"
        f"{rules}\n\n"
        f"Private information:\n{_bullets(req.private_triples)}\n\n"
        f"Public information:\n{_bullets(req.public_triples)}\n\n"
        f"Document:\n{req.doc.text}\n\n"
        "Rewritten document:"
    )


def render_qa_prompt(question: str, documents: Sequence[str]) -> str:
    ctx = "\n".join(f"[{i}] {d}" for i, d in enumerate(documents, 1))
    return f"[qa {PROMPT_VERSION}]\nAnswer the question using the documents.\n\n{ctx}\n\nQuestion: {question}\nAnswer:"


# --- remote clients ----------------------------------------------------------


class ModelClient:
    """Minimal JSON-over-HTTP client for rewrite, extract and generate tasks."""

    def __init__(self, endpoint: str, timeout: float = 30.0, retries: int = 1) -> None:
        if not endpoint:
            raise ValueError("endpoint is required for a remote client")
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries

    def post(self, payload: dict) -> dict:
        attempt = 0
        while True:
            try:
                resp = requests.post(self.endpoint, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                if attempt < self.retries:
                    attempt += 1
                    log.debug("transport error, retrying: %s", exc)
                    continue
                raise RemoteFailure(f"transport error: {exc}") from None
            if resp.status_code == 200:
                break
            if 500 <= resp.status_code < 600 and attempt < self.retries:
                attempt += 1
                continue
            raise RemoteFailure(f"HTTP {resp.status_code} from {self.endpoint}")
        try:
            body = resp.json()
        except ValueError:
            raise MalformedResponseError("response is not JSON") from None
        if not isinstance(body, dict):
            raise MalformedResponseError("response is not a JSON object")
        return body


def _text_field(body: dict) -> str:
    text = body.get("text")
    if not isinstance(text, str):
        raise MalformedResponseError("response lacks a string 'text' field")
    return text


class RemoteRewriter:
    concurrent = True

    def __init__(self, client: ModelClient, rewriter_id: str = "remote") -> None:
        self.client = client
        self.rewriter_id = rewriter_id

    def rewrite_text(self, req: RewriteRequest) -> str:
        body = self.client.post(
            {
                "task": "rewrite",
                "text": req.doc.text,
                "private": [t.to_dict() for t in sorted(req.private_triples)],
                "public": [t.to_dict() for t in sorted(req.public_triples)],
                "prompt": render_prompt(req),
            }
        )
        return _text_field(body)


class RemoteGenerator:
    def __init__(self, client: ModelClient) -> None:
        self.client = client

    def generate(self, question: str, documents: Sequence[str]) -> str:
        body = self.client.post(
            {"task": "generate", "text": question, "private": [], "public": [],
             "prompt": render_qa_prompt(question, documents)}
        )
        return _text_field(body)


class RemoteExtractor:
    def __init__(self, client: ModelClient) -> None:
        self.client = client

    def extract(self, text: str, doc_id: str | None = None) -> frozenset[Triple]:
        body = self.client.post({"task": "extract", "text": text, "private": [], "public": [], "prompt": ""})
        rows = body.get("triples")
        if not isinstance(rows, list):
            raise MalformedResponseError("response lacks a 'triples' list")
        try:
            return frozenset(Triple.from_dict(r) for r in rows)
        except (KgEraseError, TypeError, AttributeError) as exc:
            raise MalformedResponseError(f"bad triple in response: {exc}") from None


# --- local extractors --------------------------------------------------------


class PatternExtractor:
    """Parses ``"<head> <relation> <tail>."`` sentences over a fixed relation table."""

    def __init__(self, relations: Sequence[str] = RELATIONS) -> None:
        self._re = pattern_regex(tuple(relations))

    def extract(self, text: str, doc_id: str | None = None) -> frozenset[Triple]:
        return frozenset(Triple(h, r, t) for h, r, t in self._re.findall(text))


class SidecarExtractor:
    """Serves pre-extracted triples from a JSON-lines sidecar file.

    Rows may carry a ``doc_id``; rows without one apply to any document.
    """

    def __init__(self, by_doc: Mapping[str | None, Iterable[Triple]]) -> None:
        self.by_doc = {k: frozenset(v) for k, v in by_doc.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "SidecarExtractor":
        by_doc: dict[str | None, set[Triple]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    by_doc.setdefault(row.get("doc_id"), set()).add(Triple.from_dict(row))
                except (ValueError, AttributeError, TypeError) as exc:
                    raise SchemaViolationError(f"{path}:{lineno}: {exc}") from None
        return cls(by_doc)

    def extract(self, text: str, doc_id: str | None = None) -> frozenset[Triple]:
        if doc_id in self.by_doc:
            return self.by_doc[doc_id]
        return self.by_doc.get(None, frozenset())


# --- harness -----------------------------------------------------------------


def run_rewrites(
    requests_: Sequence[RewriteRequest], rewriter: Rewriter, parallelism: int = 4
) -> list[RewriteResult | RewriteFailure]:
    """Rewrite every request with bounded concurrency; failures never abort the batch."""
    gate = None if getattr(rewriter, "concurrent", True) else threading.Lock()

    def one(req: RewriteRequest) -> RewriteResult | RewriteFailure:
        t0 = time.perf_counter()
        try:
            if gate is None:
                text = rewriter.rewrite_text(req)
            else:
                with gate:
                    text = rewriter.rewrite_text(req)
        except AlignmentGapError:
            raise
        except KgEraseError as exc:
            log.warning("rewrite of %s failed: %s", req.doc.doc_id, exc)
            return RewriteFailure(req.doc.doc_id, str(exc), time.perf_counter() - t0, rewriter.rewriter_id)
        return RewriteResult(req.doc.doc_id, text, time.perf_counter() - t0, rewriter.rewriter_id)

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        return list(pool.map(one, requests_))
