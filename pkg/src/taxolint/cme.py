"""Class/instance anti-pattern detection over the taxonomy graph.

Stage order mirrors how editors triage a dump: split into weakly
connected components, walk in from natural entry points, then flag
entities whose P31/P279 usage conflicts.  The pure-class filter and
entity-tree analytics summarize how much of the graph is a clean
subclass forest.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum

from .core import (
    D_MAX_DEFAULT,
    EdgeKind,
    EntityId,
    MetaclassPolicy,
    TaxonomyGraph,
    format_qid,
)
from .errors import UnknownEntityError

P31 = EdgeKind.INSTANCE_OF
P279 = EdgeKind.SUBCLASS_OF


class AntiPatternTag(Enum):
    DUAL_ROLE = "DualRole"
    INSTANCE_WITH_SUBCLASSES = "InstanceWithSubclasses"
    CYCLE_MEMBER = "CycleMember"
    REDUNDANT_EDGE = "RedundantEdge"
    SELF_LOOP = "SelfLoop"


_TAG_ORDER = {tag: i for i, tag in enumerate(AntiPatternTag)}


@dataclass(frozen=True)
class AntiPatternFlag:
    """One detected anti-pattern occurrence.

    ``detail`` is the compact report string (e.g. ``via:Q2`` for a
    redundant edge, ``cycle:Q7-Q8`` for a cycle).  Structured payloads
    ride along for programmatic use: ``target`` is the redundant edge's
    parent, ``members`` the cycle's node list, ``witnesses`` the
    verified redundant paths (child..parent node sequences).
    """

    entity: EntityId
    tag: AntiPatternTag
    detail: str = ""
    target: EntityId | None = None
    members: tuple[EntityId, ...] = ()
    witnesses: tuple[tuple[EntityId, ...], ...] = ()


@dataclass(frozen=True)
class ComponentLabeling:
    """Weakly-connected component ids, dense by ascending smallest member."""

    component_of: dict[EntityId, int]
    component_sizes: dict[int, int]

    @property
    def component_count(self) -> int:
        return len(self.component_sizes)


@dataclass(frozen=True)
class PureClassReport:
    pure_classes: frozenset[EntityId]
    pure_with_instances: frozenset[EntityId]
    tree_roots: frozenset[EntityId]
    instances_covered: int
    coverage_ratio: float


def weakly_connected_components(g: TaxonomyGraph) -> ComponentLabeling:
    """Exact WCC labeling over the union of both edge kinds."""
    n = g.node_count
    parent = list(range(n))

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for kind in EdgeKind:
        adj = g._adj[kind]
        indptr, indices = adj.fwd_indptr, adj.fwd_indices
        for u in range(n):
            for v in indices[indptr[u]:indptr[u + 1]]:
                ru, rv = find(u), find(int(v))
                if ru != rv:
                    parent[max(ru, rv)] = min(ru, rv)

    # roots are the smallest ordinal of each component, and ordinals
    # ascend with entity id, so sorting roots gives the dense ids
    roots = sorted({find(o) for o in range(n)})
    dense = {root: i for i, root in enumerate(roots)}
    component_of: dict[EntityId, int] = {}
    component_sizes: dict[int, int] = {}
    for o in range(n):
        cid = dense[find(o)]
        component_of[g.entity_at(o)] = cid
        component_sizes[cid] = component_sizes.get(cid, 0) + 1
    return ComponentLabeling(component_of, component_sizes)


def entry_points(
    g: TaxonomyGraph, labeling: ComponentLabeling, component: int
) -> list[EntityId]:
    """Zero out-degree nodes of one component, ascending id.

    An empty result means every node has a parent, which implies the
    component contains a cycle.
    """
    if component not in labeling.component_sizes:
        raise ValueError(f"no such component: {component}")
    result = []
    for entity, cid in labeling.component_of.items():
        if cid != component:
            continue
        o = g.ordinal(entity)
        if len(g.out_ordinals(o, P31)) == 0 and len(g.out_ordinals(o, P279)) == 0:
            result.append(entity)
    return sorted(result)


def _p279_sccs(g: TaxonomyGraph) -> list[list[int]]:
    """Tarjan SCCs (size >= 2 only) over P279 edges, iterative."""
    n = g.node_count
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0

    for start in range(n):
        if index[start] != -1:
            continue
        work = [(start, 0)]
        while work:
            v, ei = work[-1]
            if ei == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            out = g.out_ordinals(v, P279)
            if ei < len(out):
                work[-1] = (v, ei + 1)
                w = int(out[ei])
                if index[w] == -1:
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    scc = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        scc.append(w)
                        if w == v:
                            break
                    if len(scc) >= 2:
                        sccs.append(scc)
    return sccs


def _shortest_witness(
    adj: list[list[int]], child: int, parent: int, depth_cap: int
) -> tuple[int, ...] | None:
    """Shortest simple P279 path child->..->parent of length >= 2, if any.

    BFS with the direct edge masked; the child is marked visited up
    front, so no walk can re-enter it and reuse the masked edge.
    """
    prev = {child: child}
    frontier = [v for v in adj[child] if v != parent and v != child]
    for v in frontier:
        prev.setdefault(v, child)
    depth = 1
    while frontier and depth < depth_cap:
        depth += 1
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in prev:
                    prev[v] = u
                    nxt.append(v)
                if v == parent:
                    path = [parent]
                    while path[-1] != child:
                        path.append(prev[path[-1]])
                    return tuple(reversed(path))
        frontier = nxt
    return None


# DFS expansion budget per redundant edge when collecting extra
# witnesses; keeps worst-case cost polynomial on dense cyclic graphs.
_WITNESS_BUDGET = 20_000


def _redundant_witnesses(
    adj: list[list[int]], child: int, parent: int, max_paths: int, depth_cap: int
) -> list[tuple[int, ...]]:
    """Up to max_paths simple P279 paths child->..->parent, length >= 2.

    Presence is decided by an exact BFS; enumeration of additional
    witnesses is budgeted DFS (ascending neighbor order, deterministic),
    so at least the shortest witness is always reported.
    """
    first = _shortest_witness(adj, child, parent, depth_cap)
    if first is None:
        return []
    if max_paths == 1:
        return [first]

    witnesses: list[tuple[int, ...]] = []
    budget = _WITNESS_BUDGET
    path = [child]
    on_path = {child}

    def visit(u: int) -> bool:
        nonlocal budget
        if len(path) > depth_cap:
            return False
        for v in adj[u]:
            if budget <= 0:
                return True
            budget -= 1
            if v == parent:
                if len(path) >= 2:
                    witnesses.append(tuple(path) + (parent,))
                    if len(witnesses) >= max_paths:
                        return True
                continue
            if v in on_path:
                continue
            path.append(v)
            on_path.add(v)
            full = visit(v)
            path.pop()
            on_path.remove(v)
            if full:
                return True
        return False

    visit(child)
    if first not in witnesses:
        witnesses.append(first)
    witnesses.sort(key=lambda w: (len(w), w))
    return witnesses[:max_paths]


def detect_anti_patterns(
    g: TaxonomyGraph,
    policy: MetaclassPolicy | None = None,
    max_paths: int = 8,
    depth_cap: int = D_MAX_DEFAULT,
) -> list[AntiPatternFlag]:
    """Every anti-pattern flag on the graph, canonically ordered.

    A P31 edge whose target is in the policy's metaclass whitelist is
    not evidence of role mixing.  Cycle detection is exact (SCCs plus
    self-loops); redundancy witnesses are bounded by ``max_paths`` per
    edge and ``depth_cap`` hops per path, so a redundant edge whose
    only witness is longer than ``depth_cap`` goes unreported.
    Emission order: ascending entity id, then tag, then detail.
    """
    if max_paths < 1:
        raise ValueError("max_paths must be >= 1")
    policy = policy or MetaclassPolicy()
    whitelist = policy.metaclass_ids
    flags: list[AntiPatternFlag] = []

    for o in range(g.node_count):
        entity = g.entity_at(o)
        offending = [
            g.entity_at(int(p))
            for p in g.out_ordinals(o, P31)
            if g.entity_at(int(p)) not in whitelist
        ]
        if offending:
            detail = "p31:" + "-".join(format_qid(p) for p in sorted(offending))
            if len(g.out_ordinals(o, P279)) > 0:
                flags.append(AntiPatternFlag(entity, AntiPatternTag.DUAL_ROLE, detail))
            if len(g.in_ordinals(o, P279)) > 0:
                flags.append(
                    AntiPatternFlag(entity, AntiPatternTag.INSTANCE_WITH_SUBCLASSES, detail)
                )

    cycle_groups: dict[int, tuple[EntityId, ...]] = {}
    for scc in _p279_sccs(g):
        members = tuple(sorted(g.entity_at(o) for o in scc))
        for o in scc:
            cycle_groups[o] = members
    for e in g.self_loop_entities(P279):
        o = g.ordinal(int(e))
        if o not in cycle_groups:
            cycle_groups[o] = (int(e),)
    for o, members in cycle_groups.items():
        detail = "cycle:" + "-".join(format_qid(m) for m in members)
        flags.append(
            AntiPatternFlag(g.entity_at(o), AntiPatternTag.CYCLE_MEMBER, detail, members=members)
        )

    adj = [[int(v) for v in g.out_ordinals(o, P279)] for o in range(g.node_count)]
    for o in range(g.node_count):
        child = g.entity_at(o)
        for t in adj[o]:
            if t == o:
                continue
            witnesses = _redundant_witnesses(adj, o, t, max_paths, depth_cap)
            if not witnesses:
                continue
            paths = tuple(
                tuple(g.entity_at(x) for x in w)
                for w in sorted(witnesses, key=lambda w: (len(w), w))
            )
            via = "-".join(format_qid(x) for x in paths[0][1:-1])
            flags.append(
                AntiPatternFlag(
                    child,
                    AntiPatternTag.REDUNDANT_EDGE,
                    f"via:{via}",
                    target=g.entity_at(t),
                    witnesses=paths,
                )
            )

    for kind in EdgeKind:
        for e in g.self_loop_entities(kind):
            flags.append(
                AntiPatternFlag(int(e), AntiPatternTag.SELF_LOOP, f"kind:{kind.value}")
            )

    flags.sort(key=lambda f: (f.entity, _TAG_ORDER[f.tag], f.target or 0, f.detail))
    return flags


class _LazyAdjacency:
    """Ordinal->P279 successors view, materialized only where walked."""

    __slots__ = ("_g", "_rows")

    def __init__(self, g: TaxonomyGraph):
        self._g = g
        self._rows: dict[int, list[int]] = {}

    def __getitem__(self, o: int) -> list[int]:
        row = self._rows.get(o)
        if row is None:
            row = [int(v) for v in self._g.out_ordinals(o, P279)]
            self._rows[o] = row
        return row


def entity_redundancy(
    g: TaxonomyGraph,
    entity: EntityId,
    max_paths: int = 8,
    depth_cap: int = D_MAX_DEFAULT,
) -> list[AntiPatternFlag]:
    """RedundantEdge flags for one entity's outgoing P279 edges.

    Same findings as the full scan restricted to this entity, but only
    the walked neighborhood is materialized, so it is cheap on large
    graphs.
    """
    if max_paths < 1:
        raise ValueError("max_paths must be >= 1")
    o = g.ordinal(entity)
    adj = _LazyAdjacency(g)
    flags: list[AntiPatternFlag] = []
    for t in adj[o]:
        if t == o:
            continue
        witnesses = _redundant_witnesses(adj, o, t, max_paths, depth_cap)
        if not witnesses:
            continue
        paths = tuple(
            tuple(g.entity_at(x) for x in w)
            for w in sorted(witnesses, key=lambda w: (len(w), w))
        )
        via = "-".join(format_qid(x) for x in paths[0][1:-1])
        flags.append(
            AntiPatternFlag(
                entity,
                AntiPatternTag.REDUNDANT_EDGE,
                f"via:{via}",
                target=g.entity_at(t),
                witnesses=paths,
            )
        )
    flags.sort(key=lambda f: (f.entity, _TAG_ORDER[f.tag], f.target or 0, f.detail))
    return flags


def _cycle_ordinals(g: TaxonomyGraph) -> set[int]:
    members = {o for scc in _p279_sccs(g) for o in scc}
    members.update(g.ordinal(int(e)) for e in g.self_loop_entities(P279))
    return members


def pure_class_filter(g: TaxonomyGraph) -> PureClassReport:
    """Degree-based pure classes and the subset rooting clean entity trees.

    A pure class has exactly one outgoing P279 edge and at most two
    outgoing P31 edges and sits on no P279 cycle.  Its tree is the
    incoming-P279 closure; the tree is clean when every non-root member
    has exactly one parent inside the closure and the root has none.
    Coverage counts distinct entities with a P31 edge into any clean tree.
    """
    in_cycle = _cycle_ordinals(g)
    pure_ords = [
        o
        for o in range(g.node_count)
        if len(g.out_ordinals(o, P279)) == 1
        and len(g.out_ordinals(o, P31)) <= 2
        and o not in in_cycle
    ]
    pure_classes = frozenset(g.entity_at(o) for o in pure_ords)
    pure_with_instances = frozenset(
        g.entity_at(o) for o in pure_ords if len(g.in_ordinals(o, P31)) > 0
    )

    tree_roots = set()
    covered_nodes: set[int] = set()
    for root in pure_ords:
        closure = {root}
        frontier = [root]
        while frontier:
            nxt = []
            for u in frontier:
                for c in g.in_ordinals(u, P279):
                    c = int(c)
                    if c not in closure:
                        closure.add(c)
                        nxt.append(c)
            frontier = nxt
        ok = True
        for x in closure:
            inside = sum(1 for p in g.out_ordinals(x, P279) if int(p) in closure)
            if inside != (0 if x == root else 1):
                ok = False
                break
        if ok:
            tree_roots.add(g.entity_at(root))
            covered_nodes |= closure

    instances = {
        o
        for o in range(g.node_count)
        if any(int(p) in covered_nodes for p in g.out_ordinals(o, P31))
    }
    ratio = len(instances) / g.node_count if g.node_count else 0.0
    return PureClassReport(
        pure_classes=pure_classes,
        pure_with_instances=pure_with_instances,
        tree_roots=frozenset(tree_roots),
        instances_covered=len(instances),
        coverage_ratio=ratio,
    )


def sample_component(
    g: TaxonomyGraph,
    labeling: ComponentLabeling,
    seed_root: EntityId,
    size: int,
    rng_seed: int,
) -> set[EntityId]:
    """Uniform sample (without replacement) of seed_root's descendants.

    Descendants are everything reachable against edge direction, i.e.
    the entities that sit below the root; the root itself is excluded.
    Deterministic for a fixed rng_seed; truncates to the reachable
    count when it is smaller than ``size``.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    if seed_root not in labeling.component_of:
        raise UnknownEntityError(seed_root)
    start = g.ordinal(seed_root)
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for kind in EdgeKind:
                for c in g.in_ordinals(u, kind):
                    c = int(c)
                    if c not in seen:
                        seen.add(c)
                        nxt.append(c)
        frontier = nxt
    seen.discard(start)
    descendants = sorted(g.entity_at(o) for o in seen)
    if len(descendants) <= size:
        return set(descendants)
    return set(random.Random(rng_seed).sample(descendants, size))
