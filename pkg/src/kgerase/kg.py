"""Triples, knowledge graphs and undirected entity connectivity."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from kgerase._kernels import component_labels
from kgerase.errors import InvalidEntityError, SchemaViolationError


def normalize_entity(raw: str) -> str:
    """Trim, collapse internal whitespace and case-fold ``raw``.

    >>> normalize_entity("  John   Doe ")
    'john doe'
    """
    text = " ".join(str(raw).split()).casefold()
    if not text:
        raise InvalidEntityError(f"entity is empty after normalization: {raw!r}")
    return text


@dataclass(frozen=True, order=True)
class Triple:
    """A normalized ``(head, relation, tail)`` fact.

    Fields are normalized on construction, so two triples compare equal iff
    their normalized fields are equal. Ordering is lexicographic.
    """

    head: str
    relation: str
    tail: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "head", normalize_entity(self.head))
        object.__setattr__(self, "relation", normalize_entity(self.relation))
        object.__setattr__(self, "tail", normalize_entity(self.tail))

    def to_dict(self) -> dict[str, str]:
        return {"head": self.head, "relation": self.relation, "tail": self.tail}

    @classmethod
    def from_dict(cls, row: Mapping[str, object]) -> "Triple":
        try:
            return cls(row["head"], row["relation"], row["tail"])  # type: ignore[arg-type]
        except KeyError as exc:
            raise SchemaViolationError(f"triple row missing field {exc.args[0]!r}") from None


class KnowledgeGraph:
    """Immutable set of triples with an undirected entity-connectivity index.

    Component labels are computed lazily on the first connectivity query and
    cached, so a graph can be shared between any number of readers.
    """

    def __init__(self, triples: Iterable[Triple] = ()) -> None:
        self._triples = frozenset(triples)

    @property
    def triples(self) -> frozenset[Triple]:
        return self._triples

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self._triples))

    def __contains__(self, item: object) -> bool:
        return item in self._triples

    def __eq__(self, other: object) -> bool:
        if isinstance(other, KnowledgeGraph):
            return self._triples == other._triples
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._triples)

    def __repr__(self) -> str:
        return f"KnowledgeGraph({len(self._triples)} triples, {len(self.entities)} entities)"

    @cached_property
    def entity_index(self) -> Mapping[str, frozenset[Triple]]:
        index: dict[str, set[Triple]] = {}
        for t in self._triples:
            index.setdefault(t.head, set()).add(t)
            index.setdefault(t.tail, set()).add(t)
        return {e: frozenset(ts) for e, ts in index.items()}

    @cached_property
    def entities(self) -> tuple[str, ...]:
        return tuple(sorted(self.entity_index))

    @cached_property
    def _entity_ids(self) -> dict[str, int]:
        return {e: i for i, e in enumerate(self.entities)}

    @cached_property
    def labels(self) -> np.ndarray:
        """Component label (smallest entity id in the component) per entity."""
        ids = self._entity_ids
        n = len(self._triples)
        src = np.empty(n, dtype=np.int64)
        dst = np.empty(n, dtype=np.int64)
        for k, t in enumerate(self._triples):
            src[k] = ids[t.head]
            dst[k] = ids[t.tail]
        return component_labels(len(ids), src, dst)

    def component_of(self, entity: str) -> int | None:
        i = self._entity_ids.get(entity)
        return None if i is None else int(self.labels[i])

    def neighbours(self, entity: str) -> Iterator[str]:
        for t in self.entity_index.get(entity, ()):
            yield t.tail if t.head == entity else t.head


def merge_graphs(triple_sets: Iterable[Iterable[Triple]]) -> KnowledgeGraph:
    merged: set[Triple] = set()
    for ts in triple_sets:
        merged.update(ts)
    return KnowledgeGraph(merged)


def connected(g: KnowledgeGraph, a: str, b: str) -> bool:
    """True iff an undirected path of triples in ``g`` links ``a`` and ``b``.

    Entities absent from ``g`` are connected to nothing, not even themselves.
    """
    la = g.component_of(a)
    if la is None:
        return False
    return la == g.component_of(b)


def connected_bfs(g: KnowledgeGraph, a: str, b: str) -> bool:
    """Breadth-first twin of :func:`connected`, kept as an independent route."""
    if a not in g.entity_index or b not in g.entity_index:
        return False
    if a == b:
        return True
    seen = {a}
    queue = deque([a])
    while queue:
        node = queue.popleft()
        for nxt in g.neighbours(node):
            if nxt == b:
                return True
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def remove_triples(g: KnowledgeGraph, victims: Iterable[Triple]) -> KnowledgeGraph:
    return KnowledgeGraph(g.triples.difference(victims))


def load_triples(path: str | Path) -> set[Triple]:
    """Read a JSON-lines triple file; rows are normalized on load."""
    out: set[Triple] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                out.add(Triple.from_dict(row))
            except (json.JSONDecodeError, SchemaViolationError, InvalidEntityError, TypeError) as exc:
                raise SchemaViolationError(f"{path}:{lineno}: {exc}") from None
    return out


def save_triples(path: str | Path, triples: Iterable[Triple]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in sorted(triples):
            fh.write(json.dumps(t.to_dict(), ensure_ascii=False) + "\n")
