import random

from kgerase.corpus import SynthSpec, generate_synthetic, ingest
from kgerase.kg import KnowledgeGraph, Triple, merge_graphs
from kgerase.metrics import LocalSets
from kgerase.partition import PartitionConfig, make_partition
from kgerase.testsets import (
    Collection,
    build_infer,
    build_special,
    read_infer_manifest,
    read_special_manifest,
    verify_infer_witness,
    write_manifest,
)
from oracles import infer_oracle, random_collection, random_triples, special_oracle


def _local(pri, pub):
    return LocalSets(frozenset(pri), frozenset(pub), frozenset(pri) | frozenset(pub))


def test_special_member_and_non_member():
    member = build_special([("d1", _local({Triple("b", "r2", "x")}, {Triple("a", "r1", "x")}))])
    assert len(member) == 1
    assert member[0].public_triple.tail == member[0].private_triple.tail == "x"
    assert build_special([("d2", _local({Triple("b", "r2", "y")}, {Triple("a", "r1", "x")}))]) == []


def test_special_requires_different_head_or_relation():
    pri = {Triple("a", "r1", "x")}
    # same head and relation would need identical triples, which a partition never yields
    assert build_special([("d", _local(pri, {Triple("a", "r1", "x")}))]) == []
    assert build_special([("d", _local(pri, {Triple("a", "r2", "x")}))])


def test_special_is_order_invariant():
    rng = random.Random(0)
    docs = []
    for i in range(10):
        ts = sorted(random_triples(rng, 6, 6))
        docs.append((f"d{i}", _local(ts[:3], ts[3:])))
    shuffled = docs[:]
    rng.shuffle(shuffled)
    assert build_special(docs) == build_special(shuffled)


def chain_collection():
    private = Triple("john doe", "lives_in", "techville")
    anchor = Triple("jane roe", "owns", "techville")
    docs = {
        "d1": frozenset({private}),
        "d2": frozenset({Triple("john doe", "lives_next_to", "jane roe")}),
        "d3": frozenset({Triple("jane roe", "lives_in", "techville")}),
        "d4": frozenset({anchor}),
    }
    g = merge_graphs(docs.values())
    part = make_partition(g, PartitionConfig(strategy="designated", designated={private, anchor}))
    return Collection("c1", part, docs), private


def test_infer_chain_member():
    coll, private = chain_collection()
    assert private in coll.partition.private_graph
    members = build_infer([coll])
    assert len(members) == 1
    assert ("d1", private) in members[0].witnesses
    for doc_id, t in members[0].witnesses:
        assert verify_infer_witness(coll, doc_id, t)


def test_infer_single_document_is_not_member():
    t = Triple("a", "r", "b")
    docs = {"d1": frozenset({t, Triple("c", "r", "d")})}
    part = make_partition(merge_graphs(docs.values()), PartitionConfig(strategy="designated", designated={t}))
    assert build_infer([Collection("c", part, docs)]) == []


def test_builders_match_brute_force():
    rng = random.Random(21)
    n_infer = n_special = 0
    for trial in range(150):
        try:
            coll = random_collection(rng, f"c{trial}")
        except ValueError:
            continue
        expected = infer_oracle(coll.doc_triples, coll.partition.private_graph.triples)
        got = build_infer([coll])
        assert [w for m in got for w in m.witnesses] == expected
        n_infer += bool(expected)
        docs = [(d, coll.local(d)) for d in sorted(coll.doc_triples)]
        special = {m.doc_id for m in build_special(docs)}
        assert special == {d for d, loc in docs if special_oracle(loc.g_pub, loc.g_pri)}
        n_special += bool(special)
    assert n_infer > 5 and n_special > 5


def test_synthetic_plants_exactly_one_member(tmp_path):
    spec = SynthSpec(queries=3, docs_per_query=6, chains=1, decoys=2, planted_queries=1)
    corpus = generate_synthetic(spec, 5, tmp_path / "c")
    collections = []
    for g in ingest(corpus):
        part = make_partition(
            merge_graphs(d.triples for d in g.docs),
            PartitionConfig(strategy="designated", designated=g.query.private_triples),
        )
        collections.append(Collection(g.query.query_id, part, g.doc_triples))
    assert [m.collection_id for m in build_infer(collections)] == ["q0"]


def test_manifest_round_trip(tmp_path):
    coll, _ = chain_collection()
    infer = build_infer([coll])
    write_manifest(tmp_path / "infer.jsonl", infer)
    assert read_infer_manifest(tmp_path / "infer.jsonl") == infer
    special = build_special([("d", _local({Triple("b", "r2", "x")}, {Triple("a", "r1", "x")}))])
    write_manifest(tmp_path / "special.jsonl", special)
    assert read_special_manifest(tmp_path / "special.jsonl") == special
