"""Independent reference implementations used only by the tests.

Nothing here calls into ``kgerase`` connectivity code: reachability comes from
a Warshall transitive closure over a boolean adjacency matrix.
"""

from __future__ import annotations

import random

import numpy as np

from kgerase.kg import Triple, merge_graphs
from kgerase.partition import PartitionConfig, make_partition
from kgerase.testsets import Collection


def closure(triples):
    """Return (entity -> index, reachability matrix) for undirected triples."""
    ents = sorted({e for t in triples for e in (t.head, t.tail)})
    idx = {e: i for i, e in enumerate(ents)}
    n = len(ents)
    reach = np.zeros((n, n), dtype=bool)
    for t in triples:
        a, b = idx[t.head], idx[t.tail]
        reach[a, b] = reach[b, a] = True
        reach[a, a] = reach[b, b] = True
    for k in range(n):
        reach |= reach[:, k : k + 1] & reach[k : k + 1, :]
    return idx, reach


def linked(triples, a, b) -> bool:
    idx, reach = closure(triples)
    if a not in idx or b not in idx:
        return False
    return bool(reach[idx[a], idx[b]])


class Reach:
    """Cached closure for many queries against one triple set."""

    def __init__(self, triples):
        self.idx, self.reach = closure(list(triples))

    def __call__(self, a, b) -> bool:
        if a not in self.idx or b not in self.idx:
            return False
        return bool(self.reach[self.idx[a], self.idx[b]])


def random_triples(rng: random.Random, n_entities: int, n_triples: int, n_relations: int = 3) -> set[Triple]:
    out = set()
    while len(out) < n_triples:
        h = f"e{rng.randrange(n_entities)}"
        t = f"e{rng.randrange(n_entities)}"
        out.add(Triple(h, f"r{rng.randrange(n_relations)}", t))
    return out


def special_oracle(g_pub, g_pri) -> bool:
    for p in g_pub:
        for q in g_pri:
            if p.tail == q.tail and (p.head, p.relation) != (q.head, q.relation):
                return True
    return False


def infer_oracle(doc_triples: dict, g_pri_global) -> list[tuple[str, Triple]]:
    """Every (doc_id, private triple) satisfying both inference-risk clauses."""
    g_all = set().union(*doc_triples.values()) if doc_triples else set()
    g_pri = set(g_pri_global)
    g_unpri = g_all - g_pri
    hits = []
    for doc_id in sorted(doc_triples):
        gi = set(doc_triples[doc_id])
        gi_pri = gi & g_pri
        gi_unpri = gi - gi_pri
        pri_rest = Reach(g_pri - gi_pri)
        unpri_rest = Reach(g_unpri - gi_unpri)
        for t in sorted(gi_pri):
            if not pri_rest(t.head, t.tail) and unpri_rest(t.head, t.tail):
                hits.append((doc_id, t))
    return hits


def random_collection(rng: random.Random, cid: str) -> Collection:
    """At most ten documents drawn from one small random triple pool."""
    n_docs = rng.randint(1, 10)
    pool = sorted(random_triples(rng, rng.randint(4, 14), rng.randint(2, 40)))
    docs = {}
    for i in range(n_docs):
        docs[f"d{i}"] = frozenset(rng.sample(pool, rng.randint(1, min(10, len(pool)))))
    g = merge_graphs(docs.values())
    ratio = rng.choice([0.2, 0.35, 0.5])
    strategy = rng.choice(["uniform", "connected-walk"])
    part = make_partition(g, PartitionConfig(ratio=ratio, strategy=strategy, seed=rng.randrange(2**32)))
    return Collection(cid, part, docs)
