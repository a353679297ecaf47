import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgerase.errors import UndefinedRatioError
from kgerase.kg import KnowledgeGraph, Triple
from kgerase.metrics import (
    LocalSets,
    RetentionScores,
    local_sets,
    privacy_connection_ratio,
    retention_rates,
    sft_accept,
)
from kgerase.partition import PartitionConfig, make_partition
from oracles import Reach, random_triples


def T(h, r, t):
    return Triple(h, r, t)


@pytest.fixture
def partition():
    ts = random_triples(random.Random(8), 20, 40)
    return make_partition(KnowledgeGraph(ts), PartitionConfig(ratio=0.3, seed=3))


def test_local_sets_edge_cases(partition):
    empty = local_sets({T("zz", "r", "yy")}, partition)
    assert not empty.g_pri and not empty.g_pub
    own = local_sets(partition.private_graph.triples, partition)
    assert own.g_pri == partition.private_graph.triples and not own.g_pub


def test_local_sets_match_membership_scan():
    rng = random.Random(1)
    for seed in range(50):
        ts = sorted(random_triples(rng, 15, 30))
        p = make_partition(KnowledgeGraph(ts), PartitionConfig(ratio=0.4, seed=seed))
        g_i = set(rng.sample(ts, 8)) | {T("new", "r", "node")}
        loc = local_sets(g_i, p)
        assert loc.g_pri == {t for t in g_i if t in p.private_graph.triples}
        assert loc.g_pub == {t for t in g_i if t in p.public_graph.triples}
        assert not loc.g_pri & loc.g_pub
        assert loc.g_unpri == g_i - loc.g_pri


def _local(pri, pub):
    return LocalSets(frozenset(pri), frozenset(pub), frozenset(pri) | frozenset(pub))


def test_retention_identity_and_perfect_erasure():
    pri = {T("a", "r", "b"), T("c", "r", "d")}
    pub = {T("e", "r", "f")}
    loc = _local(pri, pub)
    s = retention_rates(loc.g_all, loc)
    assert (s.r_pri, s.r_pub) == (1.0, 1.0)
    s = retention_rates(pub | {T("x", "r", "y")}, loc)
    assert (s.r_pri, s.r_pub) == (0.0, 1.0)


def test_retention_hand_enumerated():
    pri = {T(f"p{i}", "r", "x") for i in range(4)}
    pub = {T(f"q{i}", "r", "y") for i in range(5)}
    rewritten = {T("p0", "r", "x")} | {T(f"q{i}", "r", "y") for i in range(4)}
    s = retention_rates(rewritten, _local(pri, pub))
    assert (s.r_pri, s.r_pub) == (0.25, 0.8)
    assert s.counts == (1, 4, 4, 5)


def test_retention_zero_denominators():
    s = retention_rates({T("a", "r", "b")}, _local(set(), set()))
    assert (s.r_pri, s.r_pub) == (0.0, 1.0)


@pytest.mark.parametrize(
    "r_pri, r_pub, ok",
    [(0.0, 0.81, True), (0.0, 0.8, False), (0.01, 1.0, False), (0.0, 1.0, True), (0.0, 0.0, False)],
)
def test_sft_accept(r_pri, r_pub, ok):
    assert sft_accept(RetentionScores(r_pri, r_pub, 0, 1, 0, 1)) is ok


def test_r_connect_examples():
    g = KnowledgeGraph(random_triples(random.Random(0), 10, 20))
    pri = set(sorted(g.triples)[:5])
    assert privacy_connection_ratio(KnowledgeGraph(pri), g) == 1.0
    assert privacy_connection_ratio(KnowledgeGraph(pri), KnowledgeGraph()) == 0.0
    chain = KnowledgeGraph({T("a", "r1", "b"), T("b", "r2", "c")})
    assert privacy_connection_ratio({T("a", "secret", "c")}, chain) == 1.0
    with pytest.raises(UndefinedRatioError):
        privacy_connection_ratio(KnowledgeGraph(), chain)


def test_r_connect_matches_closure_oracle():
    rng = random.Random(12)
    for _ in range(200):
        prime = random_triples(rng, 12, rng.randrange(1, 20))
        pri = random_triples(rng, 12, rng.randrange(1, 8))
        reach = Reach(prime)
        expected = sum(reach(t.head, t.tail) for t in pri) / len(pri)
        assert privacy_connection_ratio(KnowledgeGraph(pri), KnowledgeGraph(prime)) == expected


ent = st.sampled_from("abcdefg")
tri = st.builds(Triple, ent, st.sampled_from(["r", "s"]), ent)


@settings(max_examples=200, deadline=None)
@given(st.sets(tri, min_size=1, max_size=6), st.sets(tri, max_size=8), st.sets(tri, max_size=4))
def test_monotone_and_bounded(pri, prime, extra):
    pub = prime - pri
    loc = _local(pri, pub)
    before = retention_rates(prime, loc)
    after = retention_rates(prime | extra, loc)
    assert after.kept_pri >= before.kept_pri and after.kept_pub >= before.kept_pub
    for s in (before, after):
        assert 0.0 <= s.r_pri <= 1.0 and 0.0 <= s.r_pub <= 1.0
    rc0 = privacy_connection_ratio(KnowledgeGraph(pri), KnowledgeGraph(prime))
    rc1 = privacy_connection_ratio(KnowledgeGraph(pri), KnowledgeGraph(prime | extra))
    assert 0.0 <= rc0 <= rc1 <= 1.0
