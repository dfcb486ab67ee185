"""Shared fixtures data and brute-force oracles used across test modules."""

from __future__ import annotations

import random

import numpy as np

from taxolint.cme import detect_anti_patterns
from taxolint.core import (
    DistanceMode,
    EdgeKind,
    EntityText,
    MetaclassPolicy,
    TaxonomyGraph,
    build_graph,
)
from taxolint.drift import (
    aggregate_by_root,
    assign_pseudo_roots,
    heatmap,
    screen,
    score_drift,
)
from taxolint.embedding import OfflineProvider
from taxolint.ingest import clean_relations, write_texts, write_triples
from taxolint.report import (
    write_drift_csv,
    write_flags_csv,
    write_heatmap_csv,
    write_risk_csv,
    write_roots_csv,
)
from taxolint.risk import aggregate_risk, depth_map

P31 = EdgeKind.INSTANCE_OF
P279 = EdgeKind.SUBCLASS_OF

# Nine-node fixture: dual-role Q6, cycle Q7<->Q8, redundant Q9->Q1 (via Q2),
# diamond at Q4, instances Q5 and Q6.
G1_EDGES = [
    (2, P279, 1),
    (3, P279, 1),
    (4, P279, 2),
    (4, P279, 3),
    (6, P279, 4),
    (9, P279, 2),
    (9, P279, 1),
    (7, P279, 8),
    (8, P279, 7),
    (5, P31, 4),
    (6, P31, 2),
]

# Labels/descriptions for G1, used by embedding and CLI tests.
G1_TEXTS = [
    (1, "en", "entity", "anything that can be considered"),
    (2, "en", "railway station", "place where trains stop"),
    (3, "en", "building", "structure with a roof and walls"),
    (4, "en", "station building", "main building of a railway station"),
    (5, "en", "Tokyo Station", "railway station in Chiyoda, Tokyo"),
    (6, "en", "Shinjuku Station", "railway station in Shinjuku, Tokyo"),
    (7, "en", "chicken", "domesticated bird"),
    (8, "en", "egg", "organic vessel"),
    (9, "en", "train stop", "spot on a railway line"),
]


def build_g1() -> TaxonomyGraph:
    return build_graph(G1_EDGES)


def build_g1_artifacts(base):
    """Write every pipeline artifact for G1 into one directory (root Q1)."""
    g = build_g1()
    texts = [EntityText(*row) for row in G1_TEXTS]
    write_triples(g, base / "triples.tsv")
    write_texts(texts, base / "texts.tsv")
    write_flags_csv(base / "flags.csv", detect_anti_patterns(g))

    depths = depth_map(g, 1, cap=10)
    reports = [aggregate_risk(g, int(e), root=1, depths=depths) for e in g.nodes()]
    write_risk_csv(base / "risk.csv", reports)

    clean = clean_relations(g, MetaclassPolicy())
    screening, _ = screen(clean)
    records, _ = score_drift(clean, screening, {t.entity: t for t in texts}, OfflineProvider())
    write_drift_csv(base / "drift.csv", records, screening)
    write_roots_csv(base / "roots.csv", aggregate_by_root(records, assign_pseudo_roots(clean)))
    write_heatmap_csv(base / "heatmap.csv", heatmap(records, screening))
    return base


def graph_fingerprint(g: TaxonomyGraph):
    """Structure summary for equality checks across build orders."""
    return (
        tuple(int(x) for x in g.nodes()),
        tuple((a, k.value, b) for a, k, b in g.edges()),
        g.edge_count(P31),
        g.edge_count(P279),
        tuple(int(x) for x in g.self_loop_entities(P31)),
        tuple(int(x) for x in g.self_loop_entities(P279)),
    )


def random_edges(seed: int, max_nodes: int = 200, max_edges: int = 400):
    """Seeded edge list with sparse ids, duplicates, and self-loops."""
    rng = random.Random(seed)
    n = rng.randint(1, max_nodes)
    ids = rng.sample(range(1, 1_000_000), n)
    m = rng.randint(0, max_edges)
    edges = []
    for _ in range(m):
        kind = P279 if rng.random() < 0.7 else P31
        edges.append((rng.choice(ids), kind, rng.choice(ids)))
    return edges


def floyd_warshall(g: TaxonomyGraph, mode: DistanceMode) -> np.ndarray:
    """All-pairs shortest hops over ordinals; np.inf where unreachable."""
    n = g.node_count
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for a, kind, b in g.edges():
        i, j = g.ordinal(a), g.ordinal(b)
        if mode is DistanceMode.UNDIRECTED_UNION:
            d[i, j] = min(d[i, j], 1.0)
            d[j, i] = min(d[j, i], 1.0)
        elif kind is P279:
            d[i, j] = min(d[i, j], 1.0)
    for k in range(n):
        np.minimum(d, d[:, k : k + 1] + d[k : k + 1, :], out=d)
    return d


def oracle_flags(g: TaxonomyGraph, whitelist: frozenset[int], depth_cap: int) -> set[tuple]:
    """Anti-pattern set straight from the defining predicates.

    Normalized tuples: (entity, tag name[, extra]) where extra is the
    redundant edge's target or the self-loop's kind.
    """
    found: set[tuple] = set()
    adj = [[int(x) for x in g.out_ordinals(o, P279)] for o in range(g.node_count)]

    def succ(o: int) -> list[int]:
        return adj[o]

    for o in range(g.node_count):
        e = g.entity_at(o)
        bad_p31 = [
            g.entity_at(int(p))
            for p in g.out_ordinals(o, P31)
            if g.entity_at(int(p)) not in whitelist
        ]
        if bad_p31 and len(g.out_ordinals(o, P279)) >= 1:
            found.add((e, "DualRole"))
        if bad_p31 and len(g.in_ordinals(o, P279)) >= 1:
            found.add((e, "InstanceWithSubclasses"))

        # on a directed P279 cycle <=> reachable from itself via >= 1 edge
        frontier, seen = succ(o), set(succ(o))
        while frontier:
            if o in seen:
                break
            frontier = [
                v for u in frontier for v in succ(u) if v not in seen and not seen.add(v)
            ]
        if o in seen:
            found.add((e, "CycleMember"))

    for o in range(g.node_count):
        for t in succ(o):
            if t == o:
                continue
            # BFS from child with the direct edge masked; any arrival
            # at the parent is a simple path of length >= 2.  The child
            # itself never re-enters the frontier (a self-loop would
            # otherwise sneak the masked edge back in via c->c->t).
            frontier = [v for v in succ(o) if v != t and v != o]
            seen = {o} | set(frontier)
            hops = 1
            reached = t in frontier
            while frontier and not reached and hops < depth_cap:
                hops += 1
                frontier = [v for u in frontier for v in succ(u) if v not in seen and not seen.add(v)]
                reached = t in frontier
            if reached:
                found.add((g.entity_at(o), "RedundantEdge", g.entity_at(t)))

    for kind in EdgeKind:
        for e in g.self_loop_entities(kind):
            found.add((int(e), "SelfLoop", kind.value))
    return found


def normalize_flags(flags) -> set[tuple]:
    """Detector output -> the oracle's normalized tuple form."""
    out = set()
    for f in flags:
        if f.tag.value == "RedundantEdge":
            out.add((f.entity, f.tag.value, f.target))
        elif f.tag.value == "SelfLoop":
            out.add((f.entity, f.tag.value, f.detail.split(":", 1)[1]))
        else:
            out.add((f.entity, f.tag.value))
    return out


def union_find_components(g: TaxonomyGraph) -> list[set[int]]:
    """Weakly connected components as sets of entity ids."""
    parent = list(range(g.node_count))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, _, b in g.edges():
        ra, rb = find(g.ordinal(a)), find(g.ordinal(b))
        if ra != rb:
            parent[ra] = rb
    groups: dict[int, set[int]] = {}
    for o in range(g.node_count):
        groups.setdefault(find(o), set()).add(g.entity_at(o))
    return sorted(groups.values(), key=min)
