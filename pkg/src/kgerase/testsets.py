"""Adversarial evaluation subsets.

``build_special`` finds documents holding a public and a private triple that
share a tail entity. ``build_infer`` finds document collections in which some
document's private fact is unreachable through the *other* private triples but
still reachable through the non-private triples of the other documents.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from kgerase.kg import KnowledgeGraph, Triple, connected, merge_graphs, remove_triples
from kgerase.metrics import LocalSets, local_sets
from kgerase.partition import PrivacyPartition


@dataclass(frozen=True)
class SpecialMembership:
    doc_id: str
    public_triple: Triple
    private_triple: Triple

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "witness": {"public": self.public_triple.to_dict(), "private": self.private_triple.to_dict()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpecialMembership":
        w = d["witness"]
        return cls(d["doc_id"], Triple.from_dict(w["public"]), Triple.from_dict(w["private"]))


@dataclass(frozen=True)
class InferMembership:
    collection_id: str
    witnesses: tuple[tuple[str, Triple], ...]

    @property
    def witness(self) -> tuple[str, Triple]:
        return self.witnesses[0]

    def to_dict(self) -> dict:
        return {
            "collection_id": self.collection_id,
            "witnesses": [{"doc_id": d, "private": t.to_dict()} for d, t in self.witnesses],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InferMembership":
        return cls(
            d["collection_id"],
            tuple((w["doc_id"], Triple.from_dict(w["private"])) for w in d["witnesses"]),
        )


@dataclass
class Collection:
    """One retrieved document set with its partition."""

    collection_id: str
    partition: PrivacyPartition
    doc_triples: Mapping[str, frozenset[Triple]]
    _local: dict[str, LocalSets] = field(default_factory=dict, repr=False)

    def local(self, doc_id: str) -> LocalSets:
        if doc_id not in self._local:
            self._local[doc_id] = local_sets(self.doc_triples[doc_id], self.partition)
        return self._local[doc_id]

    @property
    def global_graph(self) -> KnowledgeGraph:
        return merge_graphs(self.doc_triples.values())


def special_witness(local: LocalSets) -> tuple[Triple, Triple] | None:
    """Smallest (public, private) pair with equal tails and differing (head, relation)."""
    by_tail: dict[str, list[Triple]] = {}
    for t in local.g_pri:
        by_tail.setdefault(t.tail, []).append(t)
    for pub in sorted(local.g_pub):
        for pri in sorted(by_tail.get(pub.tail, ())):
            if (pub.head, pub.relation) != (pri.head, pri.relation):
                return pub, pri
    return None


def build_special(docs: Iterable[tuple[object, LocalSets]]) -> list[SpecialMembership]:
    out = []
    for doc, local in docs:
        doc_id = doc if isinstance(doc, str) else doc.doc_id
        w = special_witness(local)
        if w is not None:
            out.append(SpecialMembership(doc_id, *w))
    return sorted(out, key=lambda m: m.doc_id)


def infer_witnesses(collection: Collection) -> list[tuple[str, Triple]]:
    g = collection.global_graph
    g_pri = collection.partition.private_graph
    g_unpri = remove_triples(g, g_pri.triples)
    found = []
    for doc_id in sorted(collection.doc_triples):
        local = collection.local(doc_id)
        if not local.g_pri:
            continue
        pri_rest = remove_triples(g_pri, local.g_pri)
        unpri_rest = remove_triples(g_unpri, local.g_unpri)
        for t in sorted(local.g_pri):
            if not connected(pri_rest, t.head, t.tail) and connected(unpri_rest, t.head, t.tail):
                found.append((doc_id, t))
    return found


def build_infer(collections: Sequence[Collection]) -> list[InferMembership]:
    out = []
    for c in collections:
        w = infer_witnesses(c)
        if w:
            out.append(InferMembership(c.collection_id, tuple(w)))
    return out


def verify_infer_witness(collection: Collection, doc_id: str, t: Triple) -> bool:
    """Re-check both connectivity clauses for a single witness."""
    local = collection.local(doc_id)
    if t not in local.g_pri:
        return False
    g_unpri = remove_triples(collection.global_graph, collection.partition.private_graph.triples)
    return not connected(
        remove_triples(collection.partition.private_graph, local.g_pri), t.head, t.tail
    ) and connected(remove_triples(g_unpri, local.g_unpri), t.head, t.tail)


def write_manifest(path: str | Path, members: Iterable[SpecialMembership | InferMembership]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for m in members:
            fh.write(json.dumps(m.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")


def read_special_manifest(path: str | Path) -> list[SpecialMembership]:
    with open(path, encoding="utf-8") as fh:
        return [SpecialMembership.from_dict(json.loads(line)) for line in fh if line.strip()]


def read_infer_manifest(path: str | Path) -> list[InferMembership]:
    with open(path, encoding="utf-8") as fh:
        return [InferMembership.from_dict(json.loads(line)) for line in fh if line.strip()]
