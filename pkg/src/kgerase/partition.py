"""Private/public partitioning of a global knowledge graph.

The partition is built in four steps: sample candidate private triples, keep
query triples out of the private side, drop public candidates whose endpoints
are connected through the candidate private graph, then drop private
candidates whose endpoints are connected through the filtered public graph.
Because the private side only shrinks after the public filter, both
separation conditions hold on the final sets without iterating.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from kgerase.errors import DegenerateRatioError, SchemaViolationError
from kgerase.kg import KnowledgeGraph, Triple, connected

STRATEGIES = ("uniform", "connected-walk", "designated")
DEFAULT_RATIO = 0.25


@dataclass(frozen=True)
class PartitionConfig:
    ratio: float = DEFAULT_RATIO
    strategy: str = "uniform"
    seed: int = 0
    query_triples: frozenset[Triple] = frozenset()
    # only read by the "designated" strategy: a user-chosen candidate private set
    designated: frozenset[Triple] = frozenset()

    def __post_init__(self) -> None:
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"ratio must lie in (0, 1), got {self.ratio}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        object.__setattr__(self, "query_triples", frozenset(self.query_triples))
        object.__setattr__(self, "designated", frozenset(self.designated))

    def to_dict(self) -> dict:
        out = {
            "ratio": self.ratio,
            "strategy": self.strategy,
            "seed": int(self.seed),
            "query_triples": [t.to_dict() for t in sorted(self.query_triples)],
        }
        if self.strategy == "designated":
            out["designated"] = [t.to_dict() for t in sorted(self.designated)]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "PartitionConfig":
        return cls(
            ratio=float(d["ratio"]),
            strategy=d["strategy"],
            seed=int(d["seed"]),
            query_triples=frozenset(Triple.from_dict(r) for r in d.get("query_triples", [])),
            designated=frozenset(Triple.from_dict(r) for r in d.get("designated", [])),
        )


@dataclass(frozen=True)
class PrivacyPartition:
    private_graph: KnowledgeGraph
    public_graph: KnowledgeGraph
    dropped_public: frozenset[Triple]
    dropped_private: frozenset[Triple]
    config: PartitionConfig
    # provenance: number of times a connected walk had to restart in a new component
    walk_restarts: int = field(default=0, compare=False)

    @property
    def unprivate_graph(self) -> KnowledgeGraph:
        """Everything in the source graph that did not end up private."""
        return KnowledgeGraph(
            self.public_graph.triples
            | self.dropped_public
            | self.dropped_private
        )

    def to_dict(self) -> dict:
        def rows(ts: Iterable[Triple]) -> list[dict]:
            return [t.to_dict() for t in sorted(ts)]

        return {
            "private": rows(self.private_graph.triples),
            "public": rows(self.public_graph.triples),
            "dropped_public": rows(self.dropped_public),
            "dropped_private": rows(self.dropped_private),
            "config": self.config.to_dict(),
            "walk_restarts": self.walk_restarts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PrivacyPartition":
        try:
            return cls(
                private_graph=KnowledgeGraph(Triple.from_dict(r) for r in d["private"]),
                public_graph=KnowledgeGraph(Triple.from_dict(r) for r in d["public"]),
                dropped_public=frozenset(Triple.from_dict(r) for r in d["dropped_public"]),
                dropped_private=frozenset(Triple.from_dict(r) for r in d["dropped_private"]),
                config=PartitionConfig.from_dict(d["config"]),
                walk_restarts=int(d.get("walk_restarts", 0)),
            )
        except KeyError as exc:
            raise SchemaViolationError(f"partition document missing {exc.args[0]!r}") from None

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PrivacyPartition":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _size_target(n: int, ratio: float) -> int:
    # round half up; Python's round() would send 0.5 to 0
    return int(math.floor(ratio * n + 0.5))


def sample_private_candidates(g: KnowledgeGraph, cfg: PartitionConfig) -> set[Triple]:
    """Pick the candidate private triples of ``g`` according to ``cfg``.

    The result never contains a query triple. Raises
    :class:`DegenerateRatioError` when the size target is zero or nothing
    eligible is left after query exclusion.
    """
    return _sample(g, cfg)[0]


def _sample(g: KnowledgeGraph, cfg: PartitionConfig) -> tuple[set[Triple], int]:
    if len(g) == 0:
        raise DegenerateRatioError("cannot sample from an empty graph")
    eligible = sorted(g.triples - cfg.query_triples)

    if cfg.strategy == "designated":
        chosen = set(eligible).intersection(cfg.designated)
        if not chosen:
            raise DegenerateRatioError("no designated triple is eligible")
        return chosen, 0

    target = min(_size_target(len(g), cfg.ratio), len(eligible))
    if target == 0:
        raise DegenerateRatioError(
            f"size target is zero (|G|={len(g)}, ratio={cfg.ratio}, eligible={len(eligible)})"
        )
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed & 0xFFFFFFFFFFFFFFFF))

    if cfg.strategy == "uniform":
        picks = rng.choice(len(eligible), size=target, replace=False)
        return {eligible[i] for i in picks}, 0
    return _connected_walk(eligible, target, rng)


def _connected_walk(eligible: list[Triple], target: int, rng: np.random.Generator) -> tuple[set[Triple], int]:
    incident: dict[str, list[int]] = {}
    for i, t in enumerate(eligible):
        incident.setdefault(t.head, []).append(i)
        if t.tail != t.head:
            incident.setdefault(t.tail, []).append(i)

    chosen: set[int] = set()
    restarts = -1
    while len(chosen) < target:
        restarts += 1
        remaining = [i for i in range(len(eligible)) if i not in chosen]
        start = remaining[int(rng.integers(len(remaining)))]
        chosen.add(start)
        visited = {eligible[start].head, eligible[start].tail}
        # frontier kept as a sorted list so the draw is reproducible
        frontier = sorted({i for e in visited for i in incident[e]} - chosen)
        while frontier and len(chosen) < target:
            pick = frontier[int(rng.integers(len(frontier)))]
            chosen.add(pick)
            t = eligible[pick]
            new = {t.head, t.tail} - visited
            visited |= new
            grown = set(frontier)
            grown.discard(pick)
            for e in new:
                grown.update(i for i in incident[e] if i not in chosen)
            frontier = sorted(grown)
    return {eligible[i] for i in chosen}, max(restarts, 0)


def filter_public(
    public_candidates: Iterable[Triple], private_candidates: Iterable[Triple]
) -> tuple[set[Triple], set[Triple]]:
    """Split public candidates by whether the private graph links their endpoints."""
    private = KnowledgeGraph(private_candidates)
    kept, dropped = set(), set()
    for t in public_candidates:
        (dropped if connected(private, t.head, t.tail) else kept).add(t)
    return kept, dropped


def filter_private(
    private_candidates: Iterable[Triple], public_kept: Iterable[Triple]
) -> tuple[set[Triple], set[Triple]]:
    """Drop private candidates that are inferable from the kept public graph."""
    public = KnowledgeGraph(public_kept)
    kept, dropped = set(), set()
    for t in private_candidates:
        (dropped if connected(public, t.head, t.tail) else kept).add(t)
    return kept, dropped


def make_partition(g: KnowledgeGraph, cfg: PartitionConfig) -> PrivacyPartition:
    candidates, restarts = _sample(g, cfg)
    public_candidates = g.triples - candidates
    public_kept, dropped_public = filter_public(public_candidates, candidates)
    private_kept, dropped_private = filter_private(candidates, public_kept)
    return PrivacyPartition(
        private_graph=KnowledgeGraph(private_kept),
        public_graph=KnowledgeGraph(public_kept),
        dropped_public=frozenset(dropped_public),
        dropped_private=frozenset(dropped_private),
        config=cfg,
        walk_restarts=restarts,
    )


def separation_violations(p: PrivacyPartition) -> list[tuple[str, Triple]]:
    """List every triple breaking a separation condition (empty when sound)."""
    bad: list[tuple[str, Triple]] = []
    for t in sorted(p.public_graph.triples):
        if connected(p.private_graph, t.head, t.tail):
            bad.append(("public-inferable-from-private", t))
    for t in sorted(p.private_graph.triples):
        if connected(p.public_graph, t.head, t.tail):
            bad.append(("private-inferable-from-public", t))
    for t in sorted(p.private_graph.triples & p.config.query_triples):
        bad.append(("query-triple-marked-private", t))
    return bad
