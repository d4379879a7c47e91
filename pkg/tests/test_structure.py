"""Depth assignment, sub-graph extraction, and bucket construction."""

from __future__ import annotations

import pytest

from amr_curriculum.corpus import gen_synthetic_corpus
from amr_curriculum.graph import InvalidDepth, graphs_equal, parse_penman, validate
from amr_curriculum.smatch import smatch_score
from amr_curriculum.structure import (
    EmptyCorpus,
    build_buckets,
    compute_depth,
    depth_histogram,
    extract_subgraph,
)

DEEP = "(a / a1 :ARG0 (b / b1 :ARG0 (c / c1 :ARG0 (d / d1))) :ARG1 (e / e1))"


def test_depth_die_example():
    ann = compute_depth(parse_penman("(d / die-01 :ARG1 (s / soldier :quant 9))"))
    assert ann.node_depth == {"d": 1, "s": 2}
    assert ann.graph_depth == 2  # the :quant constant adds no level


def test_depth_single_node():
    assert compute_depth(parse_penman("(a / alpha)")).graph_depth == 1


def test_depth_levels_increment_along_tree():
    ann = compute_depth(parse_penman(DEEP))
    assert ann.node_depth == {"a": 1, "b": 2, "c": 3, "d": 4, "e": 2}


def test_reentrant_edge_keeps_first_visit_depth():
    # back edge from depth 3 to the depth-2 node; b stays at 2
    g = parse_penman("(a / a1 :ARG0 (b / b1) :ARG1 (c / c1 :ARG0 (x / x1 :ARG0 b)))")
    ann = compute_depth(g)
    assert ann.node_depth["b"] == 2
    assert ann.graph_depth == 3


def test_forward_reference_depth_uses_dfs_not_shortest_path():
    # z is first reached at depth 3 through c even though a later edge from a
    # (depth 1) also points at it; DFS first visit wins
    g = parse_penman("(a / a1 :ARG0 (c / c1 :ARG0 (z / z1)) :ARG1 z)")
    assert compute_depth(g).node_depth["z"] == 3


def test_subgraph_depth1_is_root_only():
    sub = extract_subgraph(parse_penman(DEEP), 1)
    assert sub.instances == (("a", "a1"),)
    assert sub.relations == ()


def test_subgraph_at_full_depth_is_identity():
    g = parse_penman(DEEP)
    assert extract_subgraph(g, compute_depth(g).graph_depth).triples == g.triples
    assert extract_subgraph(g, 99).triples == g.triples


def test_subgraph_keeps_attributes_of_survivors():
    g = parse_penman("(a / a1 :quant 3 :ARG0 (b / b1 :polarity -))")
    sub = extract_subgraph(g, 1)
    assert sub.attributes == (("a", ":quant", "3"),)


def test_subgraph_drops_reentrant_edge_with_deeper_source():
    g = parse_penman("(a / a1 :ARG0 (b / b1) :ARG1 (c / c1 :ARG0 (x / x1 :ARG0 b)))")
    sub = extract_subgraph(g, 2)
    assert set(v for v, _ in sub.instances) == {"a", "b", "c"}
    assert ("x", ":ARG0", "b") not in sub.relations


def test_subgraph_rejects_bad_depth():
    with pytest.raises(InvalidDepth):
        extract_subgraph(parse_penman(DEEP), 0)


def test_subgraph_monotone_idempotent_valid():
    for seed in (3, 17, 2024):
        g = gen_synthetic_corpus(1, (5, 7), seed=seed)[0].graph
        depth = compute_depth(g).graph_depth
        prev: set = set()
        for d in range(1, depth + 1):
            sub = extract_subgraph(g, d)
            assert validate(sub) == []
            cur = set(sub.triples)
            assert prev <= cur
            prev = cur
            assert extract_subgraph(sub, d).triples == sub.triples
        assert smatch_score(g, extract_subgraph(g, depth)).f1 == 1.0


def test_structure_buckets_one_deep_graph():
    g = parse_penman("(a / a1 :ARG0 (b / b1 :ARG0 (c / c1)))")
    bucket_set, subs = build_buckets([("g1", "s", g)], "structure")
    assert bucket_set.max_index == 3
    assert bucket_set.sizes() == {1: 1, 2: 1, 3: 1}
    assert [i.id for i in subs] == ["g1::d1", "g1::d2", "g1::d3"]
    assert all(i.kind == "sub" and i.parent_id == "g1" for i in subs)
    # depth-tagged targets
    assert subs[1].tokens[0] == "<2>"
    # the deepest sub-instance is the full graph
    assert graphs_equal(subs[-1].graph, g, rename=False)


def test_instance_buckets_one_deep_graph():
    g = parse_penman("(a / a1 :ARG0 (b / b1 :ARG0 (c / c1)))")
    bucket_set, fulls = build_buckets([("g1", "s", g)], "instance")
    assert bucket_set.max_index == 3
    assert bucket_set.buckets == {1: (), 2: (), 3: ("g1",)}
    assert fulls[0].kind == "full"
    assert fulls[0].tokens[0] == "("  # no depth tag on full targets


def test_structure_bucket_cardinality_sums_depths():
    corpus = [(i.id, i.snt, i.graph) for i in gen_synthetic_corpus(30, (1, 6), seed=9)]
    bucket_set, subs = build_buckets(corpus, "structure")
    total_depth = sum(compute_depth(g).graph_depth for _, _, g in corpus)
    assert bucket_set.total() == total_depth == len(subs)


def test_two_graphs_depths_2_and_4_give_6_subinstances():
    g2 = parse_penman("(a / a1 :ARG0 (b / b1))")
    g4 = parse_penman("(p / p1 :ARG0 (q / q1 :ARG0 (r / r1 :ARG0 (s / s1))))")
    bucket_set, subs = build_buckets([("x", "s", g2), ("y", "s", g4)], "structure")
    assert len(subs) == 6
    assert bucket_set.sizes() == {1: 2, 2: 2, 3: 1, 4: 1}


def test_buckets_reject_empty_corpus_and_bad_level():
    with pytest.raises(EmptyCorpus):
        build_buckets([], "structure")
    with pytest.raises(ValueError):
        build_buckets([("x", "s", parse_penman("(a / alpha)"))], "depthwise")


def test_every_instance_in_exactly_one_bucket():
    corpus = [(i.id, i.snt, i.graph) for i in gen_synthetic_corpus(25, (1, 5), seed=4)]
    for level in ("structure", "instance"):
        bucket_set, instances = build_buckets(corpus, level)
        all_ids = [i for ids in bucket_set.buckets.values() for i in ids]
        assert len(all_ids) == len(set(all_ids)) == len(instances)


def test_depth_histogram_counts():
    graphs = [parse_penman("(a / alpha)"), parse_penman("(a / a1 :ARG0 (b / b1))")]
    assert depth_histogram(graphs) == {1: 1, 2: 1}
