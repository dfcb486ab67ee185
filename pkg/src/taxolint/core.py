"""Entity ids, the dual-relation taxonomy graph, and shared graph primitives.

The graph stores child->parent edges for the two Wikidata taxonomy
properties (P31 "instance of", P279 "subclass of") with forward and
reverse adjacency over a dense ordinal index.  Construction is
single-writer through :class:`GraphBuilder`; after ``finalize`` the
graph is immutable and safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

import numpy as np

from .errors import UnknownEntityError

# The N in "QN".  Unsigned 64-bit, never zero.
EntityId = int

_QID_RE = re.compile(r"^Q([1-9][0-9]*)$")
_MAX_ID = 2**64 - 1


def parse_qid(text: str) -> EntityId:
    """Parse "Q42" -> 42.  Rejects Q0, leading zeros, and non-QID text."""
    m = _QID_RE.match(text)
    if m is None:
        raise ValueError(f"not a QID: {text!r}")
    value = int(m.group(1))
    if value > _MAX_ID:
        raise ValueError(f"QID out of range: {text!r}")
    return value


def format_qid(entity: EntityId) -> str:
    """Format 42 -> "Q42"."""
    if not 1 <= entity <= _MAX_ID:
        raise ValueError(f"entity id out of range: {entity}")
    return f"Q{entity}"


class EdgeKind(Enum):
    """The two taxonomy properties, valued by their property strings."""

    INSTANCE_OF = "P31"
    SUBCLASS_OF = "P279"


class DistanceMode(Enum):
    """Edge interpretation for BFS distance."""

    UNDIRECTED_UNION = "undirected-union"
    UPWARD_P279 = "upward-P279"


@dataclass(frozen=True)
class EntityText:
    """Label and description for one entity in one language.

    Tab and newline stripping is the ingest layer's job; this type
    just carries the fields.  Either text may be empty.
    """

    entity: EntityId
    language: str
    label: str
    description: str


# Nodes that classify items by editorial function rather than meaning:
# they are excluded from parent relations during cleaning and never
# count as evidence of class/instance confusion.
DEFAULT_TECHNICAL_IDS = frozenset({16889133, 13442814, 4167410})


@dataclass(frozen=True)
class MetaclassPolicy:
    """Which entities are treated as metaclasses rather than ordinary classes.

    ``abstract_class_ids`` are user-supplied pure metaclasses;
    ``technical_node_ids`` are maintenance/classification nodes dropped
    from parent relations entirely.  The sets must not overlap.
    """

    abstract_class_ids: frozenset[EntityId] = frozenset()
    technical_node_ids: frozenset[EntityId] = DEFAULT_TECHNICAL_IDS

    def __post_init__(self) -> None:
        object.__setattr__(self, "abstract_class_ids", frozenset(self.abstract_class_ids))
        object.__setattr__(self, "technical_node_ids", frozenset(self.technical_node_ids))
        overlap = self.abstract_class_ids & self.technical_node_ids
        if overlap:
            ids = ", ".join(format_qid(e) for e in sorted(overlap))
            raise ValueError(f"abstract and technical sets overlap: {ids}")

    @property
    def metaclass_ids(self) -> frozenset[EntityId]:
        """All ids whose targets are exempt from dual-role flagging."""
        return self.abstract_class_ids | self.technical_node_ids


class _KindAdjacency:
    """CSR forward/reverse adjacency for one edge kind, plus self-loop info."""

    __slots__ = ("fwd_indptr", "fwd_indices", "rev_indptr", "rev_indices",
                 "edge_count", "loop_ordinals")

    def __init__(self, children: np.ndarray, parents: np.ndarray, n_nodes: int):
        order = np.lexsort((parents, children))
        c, p = children[order], parents[order]
        if len(c):
            keep = np.ones(len(c), dtype=bool)
            keep[1:] = (c[1:] != c[:-1]) | (p[1:] != p[:-1])
            c, p = c[keep], p[keep]
        loops = c == p
        self.loop_ordinals = c[loops].copy()
        self.edge_count = int(len(c) - loops.sum())

        self.fwd_indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(c, minlength=n_nodes), out=self.fwd_indptr[1:])
        self.fwd_indices = p

        rev_order = np.lexsort((c, p))
        self.rev_indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(p, minlength=n_nodes), out=self.rev_indptr[1:])
        self.rev_indices = c[rev_order]

        for arr in (self.fwd_indptr, self.fwd_indices,
                    self.rev_indptr, self.rev_indices, self.loop_ordinals):
            arr.setflags(write=False)


class TaxonomyGraph:
    """Immutable P31/P279 adjacency over a dense ordinal index.

    Entity ids are remapped to ordinals 0..N-1 (ascending id order) for
    compact storage; the public API accepts and returns ids.  Adjacency
    lists are duplicate-free and sorted.  Self-loops stay in the
    adjacency (they are real, reportable edges) but are excluded from
    ``edge_count`` and listed separately.
    """

    def __init__(self, ids: np.ndarray, adj: dict[EdgeKind, _KindAdjacency]):
        ids.setflags(write=False)
        self._ids = ids
        self._adj = adj

    # -- node index -------------------------------------------------

    @property
    def node_count(self) -> int:
        return len(self._ids)

    def nodes(self) -> np.ndarray:
        """All entity ids, ascending."""
        return self._ids

    def __contains__(self, entity: EntityId) -> bool:
        if not 1 <= entity <= _MAX_ID:
            return False
        i = np.searchsorted(self._ids, entity)
        return i < len(self._ids) and self._ids[i] == entity

    def ordinal(self, entity: EntityId) -> int:
        """Dense index of an entity; raises UnknownEntityError if absent."""
        if not 1 <= entity <= _MAX_ID:
            raise UnknownEntityError(entity)
        i = int(np.searchsorted(self._ids, entity))
        if i >= len(self._ids) or self._ids[i] != entity:
            raise UnknownEntityError(entity)
        return i

    def entity_at(self, ordinal: int) -> EntityId:
        return int(self._ids[ordinal])

    # -- edges ------------------------------------------------------

    def edge_count(self, kind: EdgeKind) -> int:
        """Distinct non-loop edges of one kind."""
        return self._adj[kind].edge_count

    def self_loop_entities(self, kind: EdgeKind) -> np.ndarray:
        """Ids with an edge to themselves, ascending."""
        return self._ids[self._adj[kind].loop_ordinals]

    def out_ordinals(self, ordinal: int, kind: EdgeKind) -> np.ndarray:
        a = self._adj[kind]
        return a.fwd_indices[a.fwd_indptr[ordinal]:a.fwd_indptr[ordinal + 1]]

    def in_ordinals(self, ordinal: int, kind: EdgeKind) -> np.ndarray:
        a = self._adj[kind]
        return a.rev_indices[a.rev_indptr[ordinal]:a.rev_indptr[ordinal + 1]]

    def parents(self, entity: EntityId, kind: EdgeKind) -> np.ndarray:
        """Targets of the entity's outgoing edges of one kind, ascending."""
        return self._ids[self.out_ordinals(self.ordinal(entity), kind)]

    def children(self, entity: EntityId, kind: EdgeKind) -> np.ndarray:
        """Sources of the entity's incoming edges of one kind, ascending."""
        return self._ids[self.in_ordinals(self.ordinal(entity), kind)]

    def out_degree(self, entity: EntityId, kind: EdgeKind) -> int:
        return len(self.out_ordinals(self.ordinal(entity), kind))

    def in_degree(self, entity: EntityId, kind: EdgeKind) -> int:
        return len(self.in_ordinals(self.ordinal(entity), kind))

    def edges(self) -> Iterator[tuple[EntityId, EdgeKind, EntityId]]:
        """Every stored (child, kind, parent), child-major, ascending."""
        for kind in EdgeKind:
            a = self._adj[kind]
            for o in range(self.node_count):
                child = int(self._ids[o])
                for t in a.fwd_indices[a.fwd_indptr[o]:a.fwd_indptr[o + 1]]:
                    yield child, kind, int(self._ids[t])

    def _union_neighbors(self, ordinal: int) -> Iterator[int]:
        """Out and in neighbors over both kinds; may repeat ordinals."""
        for kind in EdgeKind:
            yield from self.out_ordinals(ordinal, kind)
            yield from self.in_ordinals(ordinal, kind)


class GraphBuilder:
    """Single-writer accumulator; ``finalize`` produces the immutable graph."""

    def __init__(self) -> None:
        self._staged: dict[EdgeKind, tuple[list[int], list[int]]] = {
            kind: ([], []) for kind in EdgeKind
        }
        self._isolated: list[int] = []
        self._done = False

    def add(self, child: EntityId, kind: EdgeKind, parent: EntityId) -> None:
        if self._done:
            raise RuntimeError("builder already finalized")
        c, p = self._staged[kind]
        c.append(child)
        p.append(parent)

    def add_node(self, entity: EntityId) -> None:
        """Ensure an entity is in the node set even with no edges."""
        if self._done:
            raise RuntimeError("builder already finalized")
        self._isolated.append(entity)

    def finalize(self) -> TaxonomyGraph:
        if self._done:
            raise RuntimeError("builder already finalized")
        self._done = True
        raw = {
            kind: (np.asarray(c, dtype=np.uint64), np.asarray(p, dtype=np.uint64))
            for kind, (c, p) in self._staged.items()
        }
        isolated = np.asarray(self._isolated, dtype=np.uint64)
        self._staged.clear()
        self._isolated = []
        ids = np.unique(
            np.concatenate([a for pair in raw.values() for a in pair] + [isolated])
        )
        adj = {}
        for kind, (c, p) in raw.items():
            c_ord = np.searchsorted(ids, c).astype(np.int64)
            p_ord = np.searchsorted(ids, p).astype(np.int64)
            adj[kind] = _KindAdjacency(c_ord, p_ord, len(ids))
        return TaxonomyGraph(ids, adj)


def build_graph(edges: Iterable[tuple[EntityId, EdgeKind, EntityId]]) -> TaxonomyGraph:
    """Build a graph from (child, kind, parent) triples.

    Total over any finite stream: duplicates collapse to one stored
    edge, self-loops are kept, and the node set is every id seen on
    either side.  Input order never affects the result.
    """
    builder = GraphBuilder()
    for child, kind, parent in edges:
        builder.add(child, kind, parent)
    return builder.finalize()


D_MAX_DEFAULT = 10


def bounded_bfs_distance(
    g: TaxonomyGraph,
    a: EntityId,
    b: EntityId,
    cap: int = D_MAX_DEFAULT,
    mode: DistanceMode = DistanceMode.UNDIRECTED_UNION,
) -> int | None:
    """Exact shortest-path hops between a and b, or None beyond ``cap``.

    ``undirected-union`` ignores direction and kind; ``upward-P279``
    follows child->parent subclass edges only.  Bidirectional search
    keeps the expanded ball small on dump-scale graphs.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    mode = DistanceMode(mode)
    src, dst = g.ordinal(a), g.ordinal(b)
    if src == dst:
        return 0

    if mode is DistanceMode.UPWARD_P279:
        return _directed_bfs(g, src, dst, cap)
    return _bidirectional_bfs(g, src, dst, cap)


def _directed_bfs(g: TaxonomyGraph, src: int, dst: int, cap: int) -> int | None:
    seen = {src}
    frontier = [src]
    depth = 0
    while frontier and depth < cap:
        depth += 1
        nxt = []
        for u in frontier:
            for v in g.out_ordinals(u, EdgeKind.SUBCLASS_OF):
                v = int(v)
                if v == dst:
                    return depth
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return None


def _bidirectional_bfs(g: TaxonomyGraph, src: int, dst: int, cap: int) -> int | None:
    # Invariant: once both sides have completed their levels, every path
    # of length <= depth_a + depth_b has produced a contact, so `best`
    # is exact as soon as best <= depth_a + depth_b.
    dist_a = {src: 0}
    dist_b = {dst: 0}
    frontier_a, frontier_b = [src], [dst]
    depth_a = depth_b = 0
    best: int | None = None
    while frontier_a and frontier_b and depth_a + depth_b < cap:
        if best is not None and best <= depth_a + depth_b:
            break
        if len(frontier_a) <= len(frontier_b):
            depth_a += 1
            frontier_a, best = _expand(g, frontier_a, dist_a, dist_b, depth_a, best)
        else:
            depth_b += 1
            frontier_b, best = _expand(g, frontier_b, dist_b, dist_a, depth_b, best)
    if best is not None and best <= cap:
        return best
    return None


def _expand(
    g: TaxonomyGraph,
    frontier: list[int],
    dist_self: dict[int, int],
    dist_other: dict[int, int],
    depth: int,
    best: int | None,
) -> tuple[list[int], int | None]:
    nxt = []
    for u in frontier:
        for v in g._union_neighbors(u):
            v = int(v)
            if v in dist_self:
                continue
            dist_self[v] = depth
            nxt.append(v)
            other = dist_other.get(v)
            if other is not None and (best is None or depth + other < best):
                best = depth + other
    return nxt, best


@dataclass(frozen=True)
class Subgraph:
    """Nodes and typed edges around one entity, deterministically ordered."""

    nodes: tuple[EntityId, ...]
    edges: tuple[tuple[EntityId, EdgeKind, EntityId], ...]


def neighborhood(g: TaxonomyGraph, e: EntityId, radius: int) -> Subgraph:
    """All nodes within ``radius`` undirected hops of e, with their edges.

    An edge is kept when both endpoints are inside the ball and at
    least one endpoint is strictly inside it (distance < radius), i.e.
    exactly the edges traversed while expanding.  Nodes ascend by id;
    edges sort by (child, kind, parent).
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    start = g.ordinal(e)
    dist = {start: 0}
    frontier = [start]
    depth = 0
    while frontier and depth < radius:
        depth += 1
        nxt = []
        for u in frontier:
            for v in g._union_neighbors(u):
                v = int(v)
                if v not in dist:
                    dist[v] = depth
                    nxt.append(v)
        frontier = nxt

    edges = []
    for u, du in dist.items():
        for kind in EdgeKind:
            for v in g.out_ordinals(u, kind):
                v = int(v)
                dv = dist.get(v)
                if dv is not None and min(du, dv) < radius:
                    edges.append((g.entity_at(u), kind, g.entity_at(v)))
    edges.sort(key=lambda t: (t[0], t[1].value, t[2]))
    nodes = tuple(sorted(g.entity_at(o) for o in dist))
    return Subgraph(nodes=nodes, edges=tuple(edges))
