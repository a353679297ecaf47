"""Corpus records, ingestion with validation, and the synthetic corpus generator.

A corpus directory holds three JSON-lines files::

    queries.jsonl  {query_id, text, answers[], query_triples[], private_triples[]?}
    docs.jsonl     {doc_id, query_id, text, sentences[][2]}
    triples.jsonl  {doc_id, head, relation, tail}

``private_triples`` is optional; it is a user-designated candidate private set
consumed by the ``designated`` partition strategy. Synthetic corpora also carry
``alignment.jsonl`` (sentence index -> triples) and ``expected.json``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from kgerase.errors import AlignmentGapError, DanglingReferenceError, InvalidEntityError, SchemaViolationError
from kgerase.kg import Triple

QUERIES_FILE = "queries.jsonl"
DOCS_FILE = "docs.jsonl"
TRIPLES_FILE = "triples.jsonl"
ALIGNMENT_FILE = "alignment.jsonl"
EXPECTED_FILE = "expected.json"

RELATIONS = (
    "lives_in",
    "lives_next_to",
    "owns",
    "born_in",
    "works_for",
    "studied_at",
    "married_to",
    "located_in",
)


@dataclass(frozen=True)
class DocumentRecord:
    doc_id: str
    query_id: str
    text: str
    sentences: tuple[tuple[int, int], ...]
    triples: frozenset[Triple] = frozenset()
    triples_path: str = TRIPLES_FILE

    def sentence_texts(self) -> list[str]:
        return [self.text[a:b] for a, b in self.sentences]


@dataclass(frozen=True)
class QueryRecord:
    query_id: str
    text: str
    answers: tuple[str, ...] = ()
    query_triples: frozenset[Triple] = frozenset()
    private_triples: frozenset[Triple] | None = None


@dataclass(frozen=True)
class Group:
    """A query and the documents retrieved for it."""

    query: QueryRecord
    docs: tuple[DocumentRecord, ...] = field(default_factory=tuple)

    @property
    def doc_triples(self) -> dict[str, frozenset[Triple]]:
        return {d.doc_id: d.triples for d in self.docs}


def _iter_rows(path: Path) -> Iterator[tuple[int, dict]]:
    if not path.is_file():
        raise SchemaViolationError(f"{path}: missing corpus file")
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaViolationError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(row, dict):
                raise SchemaViolationError(f"{path}:{lineno}: expected an object")
            yield lineno, row


def _require(row: dict, key: str, kind, where: str):
    if key not in row:
        raise SchemaViolationError(f"{where}: missing field {key!r}")
    value = row[key]
    if not isinstance(value, kind):
        raise SchemaViolationError(f"{where}: field {key!r} has wrong type {type(value).__name__}")
    return value


def _triples_field(row: dict, key: str, where: str) -> frozenset[Triple]:
    try:
        return frozenset(Triple.from_dict(t) for t in row.get(key) or [])
    except (SchemaViolationError, InvalidEntityError, TypeError, AttributeError) as exc:
        raise SchemaViolationError(f"{where}: bad triple in {key!r}: {exc}") from None


def _check_spans(spans: list, text: str, where: str) -> tuple[tuple[int, int], ...]:
    out = []
    prev_end = 0
    for span in spans:
        if (
            not isinstance(span, list)
            or len(span) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in span)
        ):
            raise SchemaViolationError(f"{where}: sentence span {span!r} is not a [start, end] pair")
        a, b = span
        if not (prev_end <= a <= b <= len(text)):
            raise SchemaViolationError(f"{where}: sentence span {span!r} overlaps, is unordered or out of bounds")
        out.append((a, b))
        prev_end = b
    return tuple(out)


def ingest(corpus_dir: str | Path) -> list[Group]:
    """Load and validate a corpus directory into per-query groups.

    Groups follow the order of ``queries.jsonl``; documents keep file order.
    """
    root = Path(corpus_dir)
    queries: dict[str, QueryRecord] = {}
    for lineno, row in _iter_rows(root / QUERIES_FILE):
        where = f"{root / QUERIES_FILE}:{lineno}"
        qid = _require(row, "query_id", str, where)
        if qid in queries:
            raise SchemaViolationError(f"{where}: duplicate query_id {qid!r}")
        answers = row.get("answers", [])
        if not isinstance(answers, list) or not all(isinstance(a, str) for a in answers):
            raise SchemaViolationError(f"{where}: 'answers' must be a list of strings")
        queries[qid] = QueryRecord(
            query_id=qid,
            text=_require(row, "text", str, where),
            answers=tuple(answers),
            query_triples=_triples_field(row, "query_triples", where),
            private_triples=_triples_field(row, "private_triples", where) if "private_triples" in row else None,
        )
    if not queries:
        raise SchemaViolationError(f"{root / QUERIES_FILE}: no queries")

    docs: dict[str, dict] = {}
    for lineno, row in _iter_rows(root / DOCS_FILE):
        where = f"{root / DOCS_FILE}:{lineno}"
        did = _require(row, "doc_id", str, where)
        if did in docs:
            raise SchemaViolationError(f"{where}: duplicate doc_id {did!r}")
        qid = _require(row, "query_id", str, where)
        if qid not in queries:
            raise DanglingReferenceError(f"{where}: query_id {qid!r} not found in {QUERIES_FILE}")
        text = _require(row, "text", str, where)
        spans = _check_spans(_require(row, "sentences", list, where), text, where)
        docs[did] = {"doc_id": did, "query_id": qid, "text": text, "sentences": spans, "triples": set()}
    if not docs:
        raise SchemaViolationError(f"{root / DOCS_FILE}: no documents")

    for lineno, row in _iter_rows(root / TRIPLES_FILE):
        where = f"{root / TRIPLES_FILE}:{lineno}"
        did = _require(row, "doc_id", str, where)
        if did not in docs:
            raise DanglingReferenceError(f"{where}: doc_id {did!r} not found in {DOCS_FILE}")
        try:
            docs[did]["triples"].add(Triple.from_dict(row))
        except (InvalidEntityError, TypeError) as exc:
            raise SchemaViolationError(f"{where}: {exc}") from None

    by_query: dict[str, list[DocumentRecord]] = {q: [] for q in queries}
    for d in docs.values():
        by_query[d["query_id"]].append(
            DocumentRecord(
                doc_id=d["doc_id"],
                query_id=d["query_id"],
                text=d["text"],
                sentences=d["sentences"],
                triples=frozenset(d["triples"]),
            )
        )
    return [Group(queries[q], tuple(by_query[q])) for q in queries]


def load_alignment(corpus_dir: str | Path) -> dict[str, list[frozenset[Triple]]]:
    """Map doc_id -> per-sentence aligned triples, read from ``alignment.jsonl``."""
    path = Path(corpus_dir) / ALIGNMENT_FILE
    if not path.is_file():
        raise AlignmentGapError(f"{path}: no sentence alignment available")
    rows: dict[str, dict[int, frozenset[Triple]]] = {}
    for lineno, row in _iter_rows(path):
        where = f"{path}:{lineno}"
        did = _require(row, "doc_id", str, where)
        idx = _require(row, "sentence", int, where)
        rows.setdefault(did, {})[idx] = _triples_field(row, "triples", where)
    out = {}
    for did, by_idx in rows.items():
        if sorted(by_idx) != list(range(len(by_idx))):
            raise AlignmentGapError(f"{path}: sentence indices of {did!r} are not contiguous from 0")
        out[did] = [by_idx[i] for i in range(len(by_idx))]
    return out


# --- synthetic corpora -------------------------------------------------------


def sentence_for(t: Triple) -> str:
    return f"{t.head} {t.relation} {t.tail}."


@dataclass(frozen=True)
class SynthSpec:
    queries: int = 4
    docs_per_query: int = 10
    chains: int = 1
    decoys: int = 1
    fillers: int = 12
    with_special: bool = True
    # only the first ``planted_queries`` queries get planted chains (None: all)
    planted_queries: int | None = None

    def __post_init__(self) -> None:
        if self.docs_per_query < 4 and self.chains:
            raise ValueError("planted chains need at least 4 documents per query")
        if self.docs_per_query < 2 and self.decoys:
            raise ValueError("decoys need at least 2 documents per query")
        if self.docs_per_query < 1 or self.queries < 1:
            raise ValueError("need at least one query and one document per query")


def _write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def generate_synthetic(spec: SynthSpec, seed: int, out_dir: str | Path) -> Path:
    """Write a one-triple-per-sentence corpus with planted inference chains.

    Each planted chain uses fresh entities ``j, x, t`` spread over four
    distinct documents::

        (j, lives_in, t)       designated private
        (j, lives_next_to, x)  public candidate, linked to j and x through private triples
        (x, lives_in, t)       public candidate, linked to x and t through private triples
        (x, owns, t)           designated private

    Both public candidates get dropped by the public filter, so they stay in
    the non-private graph and keep ``j ~ t`` and ``x ~ t`` reachable from the
    other documents. A decoy is ``(j, lives_in, t)`` private plus
    ``(j, lives_next_to, x)`` public with no way back to ``t``. Fillers are
    public triples on their own entities; with ``with_special`` each chain's
    private document also gets ``(p, born_in, t)`` sharing the private tail.

    ``expected.json`` records, by construction, which queries and documents
    the test-set builders must return and the fixed-point metrics for the
    reference rewriters under the ``designated`` strategy.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    k = spec.docs_per_query

    query_rows, doc_rows, triple_rows, align_rows = [], [], [], []
    expected_infer, expected_special = [], []
    r_connect_parts = []

    for q in range(spec.queries):
        qid = f"q{q}"
        counter = iter(range(10**9))

        def ent(role: str) -> str:
            return f"{role} {q}x{next(counter)}"

        placed: list[list[Triple]] = [[] for _ in range(k)]
        private: list[Triple] = []
        special_docs: set[int] = set()
        question = None

        n_chains = spec.chains if spec.planted_queries is None or q < spec.planted_queries else 0
        for c in range(n_chains + spec.decoys):
            planted = c < n_chains
            j, x, t = ent("person"), ent("person"), ent("town")
            p_main = Triple(j, "lives_in", t)
            link = Triple(j, "lives_next_to", x)
            if planted:
                a, b, cc, d = (int(i) for i in rng.choice(k, size=4, replace=False))
                back = Triple(x, "lives_in", t)
                anchor = Triple(x, "owns", t)
                placed[a].append(p_main)
                placed[b].append(link)
                placed[cc].append(back)
                placed[d].append(anchor)
                private += [p_main, anchor]
            else:
                a, b = (int(i) for i in rng.choice(k, size=2, replace=False))
                placed[a].append(p_main)
                placed[b].append(link)
                private.append(p_main)
            if spec.with_special:
                placed[a].append(Triple(ent("person"), "born_in", t))
                special_docs.add(a)
            if question is None:
                # a question about a private fact; must be filtered from QA accuracy
                question = {
                    "text": f"where does {j} live?",
                    "answers": [t],
                    "query_triples": [link.to_dict()],
                }

        fillers = []
        filler_rel = [r for r in RELATIONS if r not in ("lives_in", "lives_next_to", "owns", "born_in")]
        for _ in range(spec.fillers):
            rel = filler_rel[int(rng.integers(len(filler_rel)))]
            fillers.append(Triple(ent("person"), rel, ent("org")))
        empty = [i for i in range(k) if not placed[i]]
        for n, f in enumerate(fillers):
            slot = empty[n] if n < len(empty) else int(rng.integers(k))
            placed[slot].append(f)
        for i in range(k):
            if not placed[i]:
                # ran out of fillers; keep every document non-empty
                f = Triple(ent("person"), filler_rel[0], ent("org"))
                fillers.append(f)
                placed[i].append(f)

        if q % 2 == 1 or question is None:
            f = fillers[0]
            question = {
                "text": f"what does {f.head} {f.relation.replace('_', ' ')}?",
                "answers": [f.tail],
                "query_triples": [f.to_dict()],
            }

        query_rows.append(
            {
                "query_id": qid,
                **question,
                "private_triples": [t.to_dict() for t in sorted(private)],
            }
        )

        for i in range(k):
            sents = placed[i]
            order = rng.permutation(len(sents))
            sents = [sents[o] for o in order]
            did = f"{qid}-d{i}"
            text_parts, spans, pos = [], [], 0
            for s_idx, t in enumerate(sents):
                s = sentence_for(t)
                if s_idx:
                    pos += 1
                spans.append([pos, pos + len(s)])
                text_parts.append(s)
                pos += len(s)
                align_rows.append({"doc_id": did, "sentence": s_idx, "triples": [t.to_dict()]})
                triple_rows.append({"doc_id": did, **t.to_dict()})
            doc_rows.append({"doc_id": did, "query_id": qid, "text": " ".join(text_parts), "sentences": spans})
            if i in special_docs:
                expected_special.append(did)

        if n_chains:
            expected_infer.append(qid)
            r_connect_parts.append((2 * n_chains) / (2 * n_chains + spec.decoys))

    _write_jsonl(out / QUERIES_FILE, query_rows)
    _write_jsonl(out / DOCS_FILE, doc_rows)
    _write_jsonl(out / TRIPLES_FILE, triple_rows)
    _write_jsonl(out / ALIGNMENT_FILE, align_rows)

    has_private = spec.chains + spec.decoys > 0
    sentence_drop_connect = sum(r_connect_parts) / len(r_connect_parts) if r_connect_parts else None
    expected = {
        "spec": spec.__dict__,
        "seed": seed,
        "strategy": "designated",
        "infer_members": expected_infer,
        "special_members": sorted(expected_special),
        "fixed_points": {
            "identity": {"mean_r_pri": 1.0 if has_private else None, "mean_r_pub": 1.0,
                         "r_connect": 1.0 if expected_infer else None},
            "redact": {"mean_r_pri": 0.0 if has_private else None, "mean_r_pub": 0.0,
                       "r_connect": 0.0 if expected_infer else None},
            "sentence-drop": {"mean_r_pri": 0.0 if has_private else None, "mean_r_pub": 1.0,
                              "r_connect": sentence_drop_connect},
        },
        "sentence_drop_r_connect_parts": r_connect_parts,
    }
    (out / EXPECTED_FILE).write_text(json.dumps(expected, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return out


_SENTENCE_RE_CACHE: dict[tuple[str, ...], re.Pattern] = {}


def pattern_regex(relations: tuple[str, ...] = RELATIONS) -> re.Pattern:
    if relations not in _SENTENCE_RE_CACHE:
        alt = "|".join(re.escape(r) for r in sorted(relations, key=len, reverse=True))
        _SENTENCE_RE_CACHE[relations] = re.compile(rf"([^.]+?) ({alt}) ([^.]+?)\.")
    return _SENTENCE_RE_CACHE[relations]
