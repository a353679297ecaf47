"""Per-document retention rates, the SFT acceptance filter and r_connect."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from kgerase.errors import UndefinedRatioError
from kgerase.kg import KnowledgeGraph, Triple, connected
from kgerase.partition import PrivacyPartition

SFT_PUBLIC_THRESHOLD = 0.8


@dataclass(frozen=True)
class LocalSets:
    g_pri: frozenset[Triple]
    g_pub: frozenset[Triple]
    g_all: frozenset[Triple]

    @property
    def g_unpri(self) -> frozenset[Triple]:
        return self.g_all - self.g_pri


@dataclass(frozen=True)
class RetentionScores:
    r_pri: float
    r_pub: float
    kept_pri: int
    n_pri: int
    kept_pub: int
    n_pub: int

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return (self.kept_pri, self.n_pri, self.kept_pub, self.n_pub)

    def to_dict(self) -> dict:
        return {
            "r_pri": self.r_pri,
            "r_pub": self.r_pub,
            "counts": {
                "kept_pri": self.kept_pri,
                "n_pri": self.n_pri,
                "kept_pub": self.kept_pub,
                "n_pub": self.n_pub,
            },
        }


def local_sets(g_i: Iterable[Triple], partition: PrivacyPartition) -> LocalSets:
    g_all = frozenset(g_i)
    return LocalSets(
        g_pri=g_all & partition.private_graph.triples,
        g_pub=g_all & partition.public_graph.triples,
        g_all=g_all,
    )


def retention_rates(rewritten_triples: Iterable[Triple], local: LocalSets) -> RetentionScores:
    """Fraction of a document's private and public triples that survive rewriting.

    With no private triples ``r_pri`` is 0 (nothing to leak); with no public
    triples ``r_pub`` is 1 (nothing to lose).
    """
    rewritten = frozenset(rewritten_triples)
    kept_pri = len(rewritten & local.g_pri)
    kept_pub = len(rewritten & local.g_pub)
    n_pri, n_pub = len(local.g_pri), len(local.g_pub)
    return RetentionScores(
        r_pri=kept_pri / n_pri if n_pri else 0.0,
        r_pub=kept_pub / n_pub if n_pub else 1.0,
        kept_pri=kept_pri,
        n_pri=n_pri,
        kept_pub=kept_pub,
        n_pub=n_pub,
    )


def sft_accept(scores: RetentionScores) -> bool:
    return scores.r_pri == 0 and scores.r_pub > SFT_PUBLIC_THRESHOLD


def privacy_connection_ratio(g_pri: KnowledgeGraph | Iterable[Triple], g_prime: KnowledgeGraph) -> float:
    """Share of private triples whose endpoints are still linked in ``g_prime``."""
    private = g_pri.triples if isinstance(g_pri, KnowledgeGraph) else frozenset(g_pri)
    if not private:
        raise UndefinedRatioError("r_connect is undefined for an empty private graph")
    hits = sum(connected(g_prime, t.head, t.tail) for t in private)
    return hits / len(private)
