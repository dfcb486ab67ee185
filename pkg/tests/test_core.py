from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from taxolint.core import (
    DistanceMode,
    EdgeKind,
    GraphBuilder,
    MetaclassPolicy,
    Subgraph,
    bounded_bfs_distance,
    build_graph,
    format_qid,
    neighborhood,
    parse_qid,
)
from taxolint.errors import UnknownEntityError

from helpers import (
    G1_EDGES,
    P31,
    P279,
    build_g1,
    floyd_warshall,
    graph_fingerprint,
    random_edges,
)


# -- entity ids ------------------------------------------------------


def test_parse_qid_valid():
    assert parse_qid("Q1") == 1
    assert parse_qid("Q35120") == 35120
    assert parse_qid("Q18446744073709551615") == 2**64 - 1


@pytest.mark.parametrize(
    "bad",
    ["Q0", "Q01", "42", "Q", "q5", "Q5x", " Q5", "Q5 ", "P279", "", "Q18446744073709551616"],
)
def test_parse_qid_rejects(bad):
    with pytest.raises(ValueError):
        parse_qid(bad)


def test_format_qid():
    assert format_qid(42) == "Q42"
    with pytest.raises(ValueError):
        format_qid(0)


@given(st.integers(min_value=1, max_value=2**64 - 1))
def test_qid_round_trip(n):
    assert parse_qid(format_qid(n)) == n


def test_edge_kind_property_strings():
    assert EdgeKind.INSTANCE_OF.value == "P31"
    assert EdgeKind.SUBCLASS_OF.value == "P279"
    assert len(EdgeKind) == 2


# -- metaclass policy ------------------------------------------------


def test_metaclass_policy_defaults():
    policy = MetaclassPolicy()
    assert 16889133 in policy.technical_node_ids
    assert 13442814 in policy.technical_node_ids
    assert 4167410 in policy.technical_node_ids
    assert policy.abstract_class_ids == frozenset()
    assert policy.metaclass_ids == policy.technical_node_ids


def test_metaclass_policy_disjointness():
    with pytest.raises(ValueError):
        MetaclassPolicy(abstract_class_ids={16889133})
    policy = MetaclassPolicy(abstract_class_ids={2})
    assert policy.metaclass_ids == frozenset({2}) | policy.technical_node_ids


# -- construction ----------------------------------------------------


def test_g1_counts(g1):
    assert g1.node_count == 9
    assert g1.edge_count(P279) == 9
    assert g1.edge_count(P31) == 2


def test_empty_stream():
    g = build_graph([])
    assert g.node_count == 0
    assert g.edge_count(P31) == 0
    assert g.edge_count(P279) == 0
    assert 1 not in g


def test_duplicate_triples_collapse():
    g = build_graph([(5, P31, 4)] * 3)
    assert g.node_count == 2
    assert g.edge_count(P31) == 1
    assert list(g.parents(5, P31)) == [4]


def test_self_loops_kept_but_counted_separately():
    g = build_graph([(3, P279, 3), (3, P279, 1)])
    assert g.edge_count(P279) == 1
    assert list(g.self_loop_entities(P279)) == [3]
    assert list(g.parents(3, P279)) == [1, 3]
    assert list(g.children(3, P279)) == [3]


def test_builder_single_use():
    b = GraphBuilder()
    b.add(2, P279, 1)
    b.finalize()
    with pytest.raises(RuntimeError):
        b.add(3, P279, 1)
    with pytest.raises(RuntimeError):
        b.finalize()


def test_nodes_ascending_and_read_only(g1):
    nodes = g1.nodes()
    assert list(nodes) == sorted(nodes)
    with pytest.raises(ValueError):
        nodes[0] = 99


def test_adjacency_sorted_and_duplicate_free():
    for seed in range(20):
        g = build_graph(random_edges(seed, max_nodes=60, max_edges=150))
        for kind in EdgeKind:
            for e in g.nodes():
                out = list(g.parents(int(e), kind))
                assert out == sorted(out)
                assert len(out) == len(set(out))


def test_build_order_insensitive():
    base = graph_fingerprint(build_g1())
    for seed in range(10):
        shuffled = list(G1_EDGES)
        random.Random(seed).shuffle(shuffled)
        assert graph_fingerprint(build_graph(shuffled)) == base


@settings(max_examples=30, deadline=None)
@given(st.permutations(G1_EDGES))
def test_build_order_insensitive_permutations(perm):
    assert graph_fingerprint(build_graph(perm)) == graph_fingerprint(build_g1())


def test_mirror_property():
    for seed in range(100):
        g = build_graph(random_edges(seed, max_nodes=200))
        for kind in EdgeKind:
            fwd = {
                (int(e), int(p))
                for e in g.nodes()
                for p in g.parents(int(e), kind)
            }
            rev = {
                (int(c), int(e))
                for e in g.nodes()
                for c in g.children(int(e), kind)
            }
            assert fwd == rev


# -- distance --------------------------------------------------------


def test_distance_g1_examples(g1):
    assert bounded_bfs_distance(g1, 2, 3, cap=10) == 2
    assert bounded_bfs_distance(g1, 4, 4) == 0
    assert bounded_bfs_distance(g1, 4, 4, mode=DistanceMode.UPWARD_P279) == 0
    assert bounded_bfs_distance(g1, 4, 7, cap=10) is None


def test_distance_cap_binds(g1):
    assert bounded_bfs_distance(g1, 5, 1, cap=3) == 3
    assert bounded_bfs_distance(g1, 5, 1, cap=2) is None


def test_distance_upward_mode(g1):
    assert bounded_bfs_distance(g1, 6, 1, mode=DistanceMode.UPWARD_P279) == 3
    assert bounded_bfs_distance(g1, 5, 1, mode=DistanceMode.UPWARD_P279) is None
    # directed: child->parent only
    assert bounded_bfs_distance(g1, 1, 2, mode=DistanceMode.UPWARD_P279) is None


def test_distance_unknown_entity(g1):
    with pytest.raises(UnknownEntityError):
        bounded_bfs_distance(g1, 2, 999)
    with pytest.raises(UnknownEntityError):
        bounded_bfs_distance(g1, 999, 2)


def test_distance_rejects_bad_cap(g1):
    with pytest.raises(ValueError):
        bounded_bfs_distance(g1, 2, 3, cap=0)


def _assert_matches_oracle(g, mode, cap, pairs):
    d = floyd_warshall(g, mode)
    for a, b in pairs:
        expected = d[g.ordinal(a), g.ordinal(b)]
        got = bounded_bfs_distance(g, a, b, cap=cap, mode=mode)
        if np.isinf(expected) or expected > cap:
            assert got is None, (a, b)
        else:
            assert got == int(expected), (a, b)


def test_distance_matches_floyd_warshall_small():
    for seed in range(100):
        g = build_graph(random_edges(seed, max_nodes=25, max_edges=60))
        if g.node_count == 0:
            continue
        ids = [int(x) for x in g.nodes()]
        pairs = [(a, b) for a in ids for b in ids]
        for mode in DistanceMode:
            _assert_matches_oracle(g, mode, cap=10, pairs=pairs)


def test_distance_matches_floyd_warshall_large_sampled():
    rng = random.Random(7)
    for seed in range(10):
        g = build_graph(random_edges(1000 + seed, max_nodes=200, max_edges=400))
        ids = [int(x) for x in g.nodes()]
        pairs = [(rng.choice(ids), rng.choice(ids)) for _ in range(100)]
        for mode in DistanceMode:
            _assert_matches_oracle(g, mode, cap=10, pairs=pairs)


def test_triangle_inequality_undirected():
    rng = random.Random(11)
    for seed in range(30):
        g = build_graph(random_edges(seed, max_nodes=40, max_edges=120))
        if g.node_count < 3:
            continue
        ids = [int(x) for x in g.nodes()]
        cap = g.node_count  # large enough that no finite path is cut off
        for _ in range(40):
            a, b, c = (rng.choice(ids) for _ in range(3))
            ab = bounded_bfs_distance(g, a, b, cap=cap)
            bc = bounded_bfs_distance(g, b, c, cap=cap)
            ac = bounded_bfs_distance(g, a, c, cap=cap)
            if ab is not None and bc is not None:
                assert ac is not None and ac <= ab + bc


# -- neighborhood ----------------------------------------------------


def test_neighborhood_radius_one(g1):
    sub = neighborhood(g1, 4, 1)
    assert sub.nodes == (2, 3, 4, 5, 6)
    assert sub.edges == (
        (4, P279, 2),
        (4, P279, 3),
        (5, P31, 4),
        (6, P279, 4),
    )


def test_neighborhood_radius_zero(g1):
    assert neighborhood(g1, 4, 0) == Subgraph(nodes=(4,), edges=())


def test_neighborhood_cycle_component(g1):
    sub = neighborhood(g1, 7, 2)
    assert sub.nodes == (7, 8)
    assert sub.edges == ((7, P279, 8), (8, P279, 7))


def test_neighborhood_errors(g1):
    with pytest.raises(UnknownEntityError):
        neighborhood(g1, 999, 1)
    with pytest.raises(ValueError):
        neighborhood(g1, 4, -1)


def test_neighborhood_full_radius_is_component(g1):
    sub = neighborhood(g1, 4, 9)
    assert sub.nodes == (1, 2, 3, 4, 5, 6, 9)
    assert len(sub.edges) == 9  # every component-1 edge, incl. Q6->Q2
