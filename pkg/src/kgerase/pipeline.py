"""End-to-end erasure evaluation runs, downstream QA, reward traces and reports."""

from __future__ import annotations

import hashlib
import json
import logging
import re
import string
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from kgerase import __version__
from kgerase._kernels import backend
from kgerase.config import STAGE_PARTITION, RunConfig, derive_seed
from kgerase.corpus import DOCS_FILE, QUERIES_FILE, TRIPLES_FILE, Group, ingest, load_alignment
from kgerase.errors import (
    ConfigError,
    DegenerateRatioError,
    IncompleteRunError,
    KgEraseError,
    UndefinedAccuracyError,
)
from kgerase.kg import KnowledgeGraph, Triple, connected, merge_graphs
from kgerase.metrics import RetentionScores, privacy_connection_ratio, retention_rates, sft_accept
from kgerase.partition import PartitionConfig, PrivacyPartition, make_partition, separation_violations
from kgerase.reward import p_schedule, reward
from kgerase.rewriters import (
    IdentityRewriter,
    ModelClient,
    PatternExtractor,
    RedactRewriter,
    RemoteExtractor,
    RemoteGenerator,
    RemoteRewriter,
    RewriteFailure,
    RewriteRequest,
    SentenceDropRewriter,
    SidecarExtractor,
    run_rewrites,
)
from kgerase.testsets import Collection, InferMembership, SpecialMembership, build_infer, build_special, write_manifest

log = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
PARTITIONS_FILE = "partitions.jsonl"
SPECIAL_FILE = "special.jsonl"
INFER_FILE = "infer.jsonl"
REWRITTEN_FILE = "rewritten.jsonl"
DOCUMENTS_FILE = "documents.jsonl"
AGGREGATE_FILE = "aggregate.json"
QA_FILE = "qa.json"

LATENCY_FIELDS = ("latency", "mean_latency")
AGGREGATION_NOTE = (
    "unweighted means over evaluated documents; r_pri averages documents with private "
    "triples, r_pub documents with public triples; r_connect averages fully evaluated "
    "inference-risk collections"
)


@dataclass
class GroupState:
    group: Group
    index: int
    partition: PrivacyPartition | None = None
    collection: Collection | None = None
    skipped: str | None = None
    special: list[SpecialMembership] = field(default_factory=list)
    infer: InferMembership | None = None


@dataclass
class EvalReport:
    documents: list[dict]
    aggregate: dict
    special: list[SpecialMembership]
    infer: list[InferMembership]
    run_dir: Path | None = None


# --- assembly ----------------------------------------------------------------


def partition_config_for(group: Group, index: int, cfg: RunConfig) -> PartitionConfig:
    designated = frozenset()
    if cfg.strategy == "designated":
        if group.query.private_triples is None:
            raise ConfigError(f"query {group.query.query_id!r} has no private_triples for the designated strategy")
        designated = group.query.private_triples
    return PartitionConfig(
        ratio=cfg.ratio,
        strategy=cfg.strategy,
        seed=derive_seed(cfg.seed, STAGE_PARTITION, index),
        query_triples=group.query.query_triples,
        designated=designated,
    )


def prepare_group(group: Group, index: int, cfg: RunConfig) -> GroupState:
    """Partition one retrieved group and build its test-set memberships."""
    state = GroupState(group, index)
    g = merge_graphs(d.triples for d in group.docs)
    pcfg = partition_config_for(group, index, cfg)
    try:
        part = make_partition(g, pcfg)
    except DegenerateRatioError as exc:
        state.skipped = str(exc)
        return state
    bad = separation_violations(part)
    if bad:  # cannot happen unless the partitioner regresses
        raise AssertionError(f"separation violated in {group.query.query_id}: {bad[:3]}")
    state.partition = part
    state.collection = Collection(group.query.query_id, part, group.doc_triples)
    docs = [(d.doc_id, state.collection.local(d.doc_id)) for d in group.docs]
    state.special = build_special(docs)
    members = build_infer([state.collection])
    state.infer = members[0] if members else None
    return state


def prepare(groups: Sequence[Group], cfg: RunConfig) -> list[GroupState]:
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda ig: prepare_group(ig[1], ig[0], cfg), enumerate(groups)))


def make_rewriter(cfg: RunConfig):
    if cfg.rewriter == "identity":
        return IdentityRewriter()
    if cfg.rewriter == "redact":
        return RedactRewriter()
    if cfg.rewriter == "sentence-drop":
        return SentenceDropRewriter(load_alignment(cfg.corpus))
    if not cfg.endpoint:
        raise ConfigError("rewriter 'remote' needs an endpoint")
    return RemoteRewriter(ModelClient(cfg.endpoint, cfg.timeout_secs))


def make_extractor(cfg: RunConfig):
    if cfg.extractor == "pattern":
        return PatternExtractor()
    if cfg.extractor == "sidecar":
        if not cfg.sidecar:
            raise ConfigError("extractor 'sidecar' needs a sidecar path")
        return SidecarExtractor.from_file(cfg.sidecar)
    endpoint = cfg.extractor_endpoint or cfg.endpoint
    if not endpoint:
        raise ConfigError("extractor 'remote' needs an endpoint")
    return RemoteExtractor(ModelClient(endpoint, cfg.timeout_secs))


def make_generator(cfg: RunConfig):
    endpoint = cfg.generator_endpoint or cfg.endpoint
    if not endpoint:
        raise ConfigError("downstream QA needs a generator endpoint")
    return RemoteGenerator(ModelClient(endpoint, cfg.timeout_secs))


def rewrite_requests(states: Sequence[GroupState], scope: str) -> list[RewriteRequest]:
    reqs = []
    for st in states:
        if st.partition is None:
            continue
        for d in st.group.docs:
            if scope == "global":
                pri, pub = st.partition.private_graph.triples, st.partition.public_graph.triples
            else:
                local = st.collection.local(d.doc_id)
                pri, pub = local.g_pri, local.g_pub
            reqs.append(RewriteRequest(d, frozenset(pri), frozenset(pub), scope))
    return reqs


# --- evaluation --------------------------------------------------------------


def _mean(xs: Sequence[float]) -> float | None:
    return sum(xs) / len(xs) if xs else None


def corpus_digest(corpus_dir: str | Path) -> str:
    h = hashlib.sha256()
    for name in (QUERIES_FILE, DOCS_FILE, TRIPLES_FILE):
        h.update(name.encode())
        h.update((Path(corpus_dir) / name).read_bytes())
    return h.hexdigest()


def evaluate_groups(
    states: Sequence[GroupState], cfg: RunConfig, rewriter, extractor
) -> tuple[list[dict], dict, list[dict]]:
    reqs = rewrite_requests(states, cfg.scope)
    outcomes = run_rewrites(reqs, rewriter, cfg.parallelism)
    by_doc = {o.doc_id: o for o in outcomes}

    def extract(o):
        if isinstance(o, RewriteFailure):
            return o.doc_id, None, o.error
        try:
            return o.doc_id, extractor.extract(o.rewritten_text, o.doc_id), None
        except KgEraseError as exc:
            return o.doc_id, None, f"extraction failed: {exc}"

    with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
        extracted = {doc_id: (ts, err) for doc_id, ts, err in pool.map(extract, outcomes)}

    p = p_schedule(cfg.iteration, cfg.reward_params)
    records, rewritten_rows = [], []
    r_connect_parts = []
    special_ids = {m.doc_id for st in states for m in st.special}
    for st in states:
        if st.partition is None:
            continue
        group_ok = True
        prime_parts = []
        for d in st.group.docs:
            o = by_doc[d.doc_id]
            ts, err = extracted[d.doc_id]
            rec = {"doc_id": d.doc_id, "query_id": d.query_id, "latency": o.latency,
                   "in_special": d.doc_id in special_ids}
            if ts is None:
                group_ok = False
                rec.update(status="unevaluated", error=err)
                rewritten_rows.append({"doc_id": d.doc_id, "status": "unevaluated", "text": None})
            else:
                scores: RetentionScores = retention_rates(ts, st.collection.local(d.doc_id))
                rec.update(status="ok", **scores.to_dict(), reward=reward(scores.r_pub, scores.r_pri, p),
                           sft_accept=sft_accept(scores))
                prime_parts.append(ts)
                rewritten_rows.append({"doc_id": d.doc_id, "status": "ok", "text": o.rewritten_text})
            records.append(rec)
        if st.infer is not None and group_ok:
            r_connect_parts.append(privacy_connection_ratio(st.partition.private_graph, merge_graphs(prime_parts)))

    ok = [r for r in records if r["status"] == "ok"]
    with_pri = [r["r_pri"] for r in ok if r["counts"]["n_pri"] > 0]
    with_pub = [r["r_pub"] for r in ok if r["counts"]["n_pub"] > 0]
    sp = [r for r in ok if r["in_special"]]
    aggregate = {
        "mean_r_pri": _mean(with_pri),
        "mean_r_pub": _mean(with_pub),
        "special_mean_r_pri": _mean([r["r_pri"] for r in sp if r["counts"]["n_pri"] > 0]),
        "special_mean_r_pub": _mean([r["r_pub"] for r in sp if r["counts"]["n_pub"] > 0]),
        "r_connect": _mean(r_connect_parts),
        "reward": _mean([r["reward"] for r in ok]),
        "sft_accept_rate": _mean([1.0 if r["sft_accept"] else 0.0 for r in ok]),
        "p": p,
        "iteration": cfg.iteration,
        "n_groups": len(states),
        "n_skipped_groups": sum(st.partition is None for st in states),
        "n_docs": len(records),
        "n_evaluated": len(ok),
        "n_unevaluated": len(records) - len(ok),
        "n_special": len(special_ids),
        "n_infer": sum(st.infer is not None for st in states),
        "n_infer_evaluated": len(r_connect_parts),
        "rewriter": getattr(rewriter, "rewriter_id", "custom"),
        "mean_latency": _mean([r["latency"] for r in records]),
        "aggregation": AGGREGATION_NOTE,
    }
    return records, aggregate, rewritten_rows


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _write_jsonl(path: Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(_dump(row) + "\n")


def new_run_dir(out: str | Path, label: str) -> Path:
    root = Path(out)
    root.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    base = root / f"run-{stamp}-{label}"
    run_dir, n = base, 0
    while run_dir.exists():
        n += 1
        run_dir = Path(f"{base}-{n}")
    run_dir.mkdir()
    return run_dir


def run_erasure_eval(
    cfg: RunConfig, rewriter=None, extractor=None, run_dir: str | Path | None = None
) -> EvalReport:
    """Partition, build test sets, rewrite, re-extract and score every group.

    Writes ``manifest.json``, per-document ``documents.jsonl`` and
    ``aggregate.json`` (plus partitions, test-set manifests and rewritten
    texts) into ``run_dir`` or a fresh timestamped directory under ``cfg.out``.
    """
    if not cfg.corpus:
        raise ConfigError("no corpus configured")
    groups = ingest(cfg.corpus)
    rewriter = rewriter or make_rewriter(cfg)
    extractor = extractor or make_extractor(cfg)

    states = prepare(groups, cfg)
    records, aggregate, rewritten_rows = evaluate_groups(states, cfg, rewriter, extractor)

    out = Path(run_dir) if run_dir is not None else new_run_dir(cfg.out, aggregate["rewriter"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "kgerase",
        "version": __version__,
        "config": cfg.to_dict(),
        "corpus_sha256": corpus_digest(cfg.corpus),
    }
    (out / MANIFEST_FILE).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    _write_jsonl(
        out / PARTITIONS_FILE,
        ({"query_id": st.group.query.query_id, "skipped": st.skipped,
          "partition": st.partition.to_dict() if st.partition else None} for st in states),
    )
    special = [m for st in states for m in st.special]
    infer = [st.infer for st in states if st.infer is not None]
    write_manifest(out / SPECIAL_FILE, special)
    write_manifest(out / INFER_FILE, infer)
    _write_jsonl(out / REWRITTEN_FILE, rewritten_rows)
    _write_jsonl(out / DOCUMENTS_FILE, records)
    (out / AGGREGATE_FILE).write_text(json.dumps(aggregate, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    log.info("run written to %s (backend=%s)", out, backend())
    return EvalReport(records, aggregate, special, infer, out)


def load_manifest(path: str | Path) -> RunConfig:
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST_FILE
    return RunConfig.from_dict(json.loads(p.read_text(encoding="utf-8"))["config"])


def strip_latency(obj):
    """Drop latency fields recursively; what remains is replay-deterministic."""
    if isinstance(obj, dict):
        return {k: strip_latency(v) for k, v in obj.items() if k not in LATENCY_FIELDS}
    if isinstance(obj, list):
        return [strip_latency(v) for v in obj]
    return obj


def load_partitions(run_dir: str | Path) -> dict[str, PrivacyPartition | None]:
    out = {}
    with open(Path(run_dir) / PARTITIONS_FILE, encoding="utf-8") as fh:
        for line in fh:
            row = json.loads(line)
            out[row["query_id"]] = PrivacyPartition.from_dict(row["partition"]) if row["partition"] else None
    return out


# --- downstream QA -----------------------------------------------------------

_PUNCT = re.compile(f"[{re.escape(string.punctuation)}]")


def normalize_answer(text: str) -> str:
    return " ".join(_PUNCT.sub(" ", text.casefold()).split())


def answer_matches(prediction: str, answers: Iterable[str]) -> bool:
    pred = f" {normalize_answer(prediction)} "
    return any(f" {normalize_answer(a)} " in pred for a in answers if normalize_answer(a))


def qa_eligible(group: Group, private_graph: KnowledgeGraph) -> bool:
    """True when no question entity is linked to an answer entity through private triples."""
    q_entities = {e for t in group.query.query_triples for e in (t.head, t.tail)}
    a_entities = {" ".join(a.split()).casefold() for a in group.query.answers if a.strip()}
    return not any(connected(private_graph, q, a) for q in q_entities for a in a_entities)


def run_downstream_qa(cfg: RunConfig, run_dir: str | Path, generator=None) -> dict:
    """Answer each eligible query from its rewritten documents; score containment match."""
    run_dir = Path(run_dir)
    if not (run_dir / REWRITTEN_FILE).is_file():
        raise IncompleteRunError(f"{run_dir}: no rewritten documents")
    groups = ingest(cfg.corpus)
    partitions = load_partitions(run_dir)
    rewritten = {}
    with open(run_dir / REWRITTEN_FILE, encoding="utf-8") as fh:
        for line in fh:
            row = json.loads(line)
            if row["status"] == "ok":
                rewritten[row["doc_id"]] = row["text"]
    generator = generator or make_generator(cfg)

    eligible, excluded = [], 0
    for g in groups:
        part = partitions.get(g.query.query_id)
        if part is None or not g.query.answers:
            excluded += 1
            continue
        if qa_eligible(g, part.private_graph):
            eligible.append(g)
        else:
            excluded += 1
    if not eligible:
        raise UndefinedAccuracyError("no QA pair is free of private information")

    def ask(g: Group):
        docs = [rewritten[d.doc_id] for d in g.docs if d.doc_id in rewritten]
        try:
            return answer_matches(generator.generate(g.query.text, docs), g.query.answers)
        except KgEraseError as exc:
            log.warning("generation for %s failed: %s", g.query.query_id, exc)
            return None

    with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
        verdicts = list(pool.map(ask, eligible))
    answered = [v for v in verdicts if v is not None]
    if not answered:
        raise UndefinedAccuracyError("every eligible generation failed")
    result = {
        "accuracy": sum(answered) / len(answered),
        "n_eligible": len(eligible),
        "n_excluded": excluded,
        "n_failed": len(verdicts) - len(answered),
        "n_correct": sum(answered),
    }
    (run_dir / QA_FILE).write_text(json.dumps(result, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return result


# --- reward traces and reports -----------------------------------------------


def reward_trace(records: Iterable[dict], iteration: int, params) -> dict:
    p = p_schedule(iteration, params)
    rows = []
    for r in records:
        if r.get("status", "ok") != "ok":
            continue
        rows.append({"doc_id": r["doc_id"], "reward": reward(r["r_pub"], r["r_pri"], p)})
    return {"iteration": iteration, "p": p, "documents": rows, "mean_reward": _mean([r["reward"] for r in rows])}


REPORT_COLUMNS = ("run", "r_pri", "r_pub", "r_connect", "reward", "acc", "latency")


def report_rows(run_dirs: Sequence[str | Path]) -> list[dict]:
    rows = []
    for rd in run_dirs:
        rd = Path(rd)
        agg_path = rd / AGGREGATE_FILE
        if not agg_path.is_file():
            raise IncompleteRunError(f"{rd}: missing {AGGREGATE_FILE}")
        agg = json.loads(agg_path.read_text(encoding="utf-8"))
        qa = json.loads((rd / QA_FILE).read_text(encoding="utf-8")) if (rd / QA_FILE).is_file() else {}
        rows.append(
            {
                "run": rd.name,
                "r_pri": agg.get("mean_r_pri"),
                "r_pub": agg.get("mean_r_pub"),
                "r_connect": agg.get("r_connect"),
                "reward": agg.get("reward"),
                "acc": qa.get("accuracy"),
                "latency": agg.get("mean_latency"),
            }
        )
    return rows


def _cell(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_table(rows: Sequence[dict]) -> str:
    cells = [list(REPORT_COLUMNS)] + [[_cell(r.get(c)) for c in REPORT_COLUMNS] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(REPORT_COLUMNS))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split()
    rows = []
    for ln in lines[2:]:
        values = ln.split()
        row = {}
        for k, v in zip(header, values):
            row[k] = v if k == "run" else (None if v == "-" else float(v))
        rows.append(row)
    return rows


def report(run_dirs: Sequence[str | Path], fmt: str = "table") -> str:
    rows = report_rows(run_dirs)
    if fmt == "json":
        return json.dumps(rows, indent=1, sort_keys=True) + "\n"
    if fmt == "table":
        return render_table(rows)
    raise ValueError(f"unknown report format {fmt!r}")
