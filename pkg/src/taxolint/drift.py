"""Structural screening, semantic drift scoring, and per-root rollups.

The pipeline over a cleaned relation graph: discard entities with
fewer than two distinct parents, segment the survivors by parent
count and depth below the pseudo-roots, measure how far each entity's
text embedding sits from the centroid of its parents' embeddings
(log-penalized by parent count), then aggregate per pseudo-root and
bin for the heatmap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .core import EdgeKind, EntityId, EntityText, TaxonomyGraph
from .embedding import EmbeddingCache, EmbeddingProvider, compose_text, embed_many
from .errors import EmptyTextError, TooFewParentsError
from .ingest import CleanedRelations

P31 = EdgeKind.INSTANCE_OF
P279 = EdgeKind.SUBCLASS_OF

DEFAULT_THRESHOLD = 0.60

# Root assigned to entities in components no pseudo-root can reach.
UNROOTED = "unrooted"

DRIFT_BINS: tuple[tuple[float, float], ...] = (
    (0.0, 0.2),
    (0.2, 0.4),
    (0.4, 0.6),
    (0.6, 1.0),
    (1.0, 1.5),
    (1.5, math.inf),
)
PARENT_GROUPS = ("<=2", "3-6", ">6")


class Segment(str, Enum):
    A = "A"
    C = "C"
    E = "E"
    OTHER = "Other"


@dataclass(frozen=True)
class ScreeningRecord:
    """Structural profile of one multi-parent entity.

    ``min_depth`` is None when no pseudo-root reaches the entity.
    """

    entity: EntityId
    parent_cnt: int
    min_depth: int | None
    segment: Segment


@dataclass(frozen=True)
class DriftRecord:
    entity: EntityId
    n: int
    drift_raw: float
    drift_adj: float
    flagged: bool


@dataclass(frozen=True)
class RootAggregate:
    root: EntityId | str
    cnt: int
    avg_drift: float
    p90: float
    high_ratio: float


class DriftValues(NamedTuple):
    n: int
    drift_raw: float
    drift_adj: float
    flagged: bool


def cleaned_parents(g: TaxonomyGraph, e: EntityId) -> list[EntityId]:
    """Distinct union of P31 and P279 targets, ascending."""
    return sorted({int(p) for p in g.parents(e, P31)} | {int(p) for p in g.parents(e, P279)})


def pseudo_roots(g: TaxonomyGraph) -> list[EntityId]:
    """Nodes that are never a child: zero outgoing edges of either kind."""
    return [
        g.entity_at(o)
        for o in range(g.node_count)
        if len(g.out_ordinals(o, P31)) == 0 and len(g.out_ordinals(o, P279)) == 0
    ]


def _depth_from_roots(g: TaxonomyGraph, roots: list[EntityId]) -> dict[int, int]:
    """Hops from the nearest pseudo-root, by ordinal; reverse BFS."""
    dist: dict[int, int] = {}
    frontier: list[int] = []
    for r in roots:
        o = g.ordinal(r)
        dist[o] = 0
        frontier.append(o)
    depth = 0
    while frontier:
        depth += 1
        nxt = []
        for u in frontier:
            for kind in EdgeKind:
                for v in g.in_ordinals(u, kind):
                    v = int(v)
                    if v not in dist:
                        dist[v] = depth
                        nxt.append(v)
        frontier = nxt
    return dist


def _segment(parent_cnt: int, min_depth: int | None) -> Segment:
    if parent_cnt > 6:
        return Segment.E
    if min_depth is not None and min_depth <= 2:
        return Segment.A if parent_cnt <= 2 else Segment.C
    return Segment.OTHER


def screen(clean: CleanedRelations) -> tuple[list[ScreeningRecord], int]:
    """Keep entities with >= 2 distinct cleaned parents; count the rest."""
    g = clean.graph
    depths = _depth_from_roots(g, pseudo_roots(g))
    records: list[ScreeningRecord] = []
    discarded = 0
    for o in range(g.node_count):
        e = g.entity_at(o)
        cnt = len(cleaned_parents(g, e))
        if cnt < 2:
            discarded += 1
            continue
        records.append(ScreeningRecord(e, cnt, depths.get(o), _segment(cnt, depths.get(o))))
    return records, discarded


def assign_pseudo_roots(clean: CleanedRelations) -> dict[EntityId, EntityId | str]:
    """Nearest pseudo-root per entity; ties go to the smallest root id.

    Entities in components without any pseudo-root map to UNROOTED.
    """
    g = clean.graph
    assigned: dict[int, EntityId | str] = {}
    frontier: dict[int, EntityId] = {}
    for r in sorted(pseudo_roots(g)):
        frontier.setdefault(g.ordinal(r), r)
    assigned.update(frontier)
    while frontier:
        nxt: dict[int, EntityId] = {}
        for u, root in frontier.items():
            for kind in EdgeKind:
                for v in g.in_ordinals(u, kind):
                    v = int(v)
                    if v in assigned:
                        continue
                    # same-level candidates merge to the smallest root
                    if v not in nxt or root < nxt[v]:
                        nxt[v] = root
        assigned.update(nxt)
        frontier = nxt
    return {
        g.entity_at(o): assigned.get(o, UNROOTED) for o in range(g.node_count)
    }


def mean_parent_embedding(parents: Iterable[np.ndarray]) -> np.ndarray:
    """Componentwise mean of the parent vectors, not re-normalized.

    Rows are summed in a canonical byte order so any permutation of
    the same parent multiset yields a bitwise-identical centroid.
    """
    rows = [np.ascontiguousarray(p, dtype=np.float32) for p in parents]
    if len(rows) < 2:
        raise TooFewParentsError("need at least two parent vectors")
    order = sorted(range(len(rows)), key=lambda i: rows[i].tobytes())
    total = np.zeros(rows[0].shape, dtype=np.float64)
    for i in order:
        total += rows[i]
    return total / len(rows)


def drift(
    e_vec: np.ndarray,
    parents: list[np.ndarray],
    threshold: float = DEFAULT_THRESHOLD,
) -> DriftValues:
    """Cosine distance from the parent centroid with a log(n+1) penalty.

    A zero centroid (mutually cancelling parents) has no direction to
    compare against and scores raw drift 1.
    """
    n = len(parents)
    centroid = mean_parent_embedding(parents)
    norm = float(np.linalg.norm(centroid))
    if norm < 1e-12:
        raw = 1.0
    else:
        e = np.asarray(e_vec, dtype=np.float64)
        cos = float(np.dot(e, centroid) / (np.linalg.norm(e) * norm))
        raw = min(max(1.0 - cos, 0.0), 2.0)
    adj = raw * math.log(n + 1)
    return DriftValues(n, raw, adj, adj >= threshold)


def score_drift(
    clean: CleanedRelations,
    screening: list[ScreeningRecord],
    texts: Mapping[EntityId, EntityText],
    provider: EmbeddingProvider,
    cache: EmbeddingCache | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> tuple[list[DriftRecord], tuple[EntityId, ...]]:
    """Drift records for every screened entity with usable text.

    Entities lacking text, or left with fewer than two text-bearing
    parents, are skipped and reported.  ``n`` counts the parents that
    actually contributed vectors.
    """
    g = clean.graph

    def composed(e: EntityId) -> str | None:
        t = texts.get(e)
        if t is None:
            return None
        try:
            return compose_text(t.label, t.description)
        except EmptyTextError:
            return None

    jobs: list[tuple[EntityId, str, list[str]]] = []
    skipped: list[EntityId] = []
    wanted: list[str] = []
    seen: set[str] = set()
    for record in screening:
        own = composed(record.entity)
        parent_texts = [s for s in (composed(p) for p in cleaned_parents(g, record.entity)) if s]
        if own is None or len(parent_texts) < 2:
            skipped.append(record.entity)
            continue
        jobs.append((record.entity, own, parent_texts))
        for s in [own, *parent_texts]:
            if s not in seen:
                seen.add(s)
                wanted.append(s)

    vectors = dict(zip(wanted, embed_many(provider, wanted, cache)))
    records = []
    for entity, own, parent_texts in jobs:
        values = drift(vectors[own], [vectors[s] for s in parent_texts], threshold)
        records.append(DriftRecord(entity, *values))
    return records, tuple(skipped)


def _root_sort_key(root: EntityId | str):
    return (1, 0) if root == UNROOTED else (0, root)


def aggregate_by_root(
    records: list[DriftRecord],
    roots: Mapping[EntityId, EntityId | str],
    threshold: float = DEFAULT_THRESHOLD,
) -> list[RootAggregate]:
    """Per-root count, mean, nearest-rank p90, and high-drift ratio.

    Output is ordered by entity count descending (root id breaks
    ties) so the head of the list is the top-roots view.
    """
    groups: dict[EntityId | str, list[float]] = {}
    for record in records:
        if record.entity not in roots:
            raise ValueError(f"entity Q{record.entity} missing from the root map")
        groups.setdefault(roots[record.entity], []).append(record.drift_adj)
    out = []
    for root, drifts in groups.items():
        values = np.sort(np.asarray(drifts, dtype=np.float64))
        cnt = len(values)
        rank = math.ceil(0.9 * cnt)  # 1-based nearest rank
        out.append(
            RootAggregate(
                root=root,
                cnt=cnt,
                avg_drift=float(values.mean()),
                p90=float(values[rank - 1]),
                high_ratio=float(np.count_nonzero(values >= threshold) / cnt),
            )
        )
    out.sort(key=lambda a: (-a.cnt, _root_sort_key(a.root)))
    return out


@dataclass(frozen=True)
class HeatmapTable:
    """Entity counts per (parent group, adjusted-drift bin) cell."""

    groups: tuple[str, ...]
    bins: tuple[tuple[float, float], ...]
    counts: tuple[tuple[int, ...], ...]  # [group][bin]

    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def iter_cells(self):
        for gi, group in enumerate(self.groups):
            for bi, (lo, hi) in enumerate(self.bins):
                yield group, lo, hi, self.counts[gi][bi]


def _group_index(parent_cnt: int) -> int:
    if parent_cnt <= 2:
        return 0
    if parent_cnt <= 6:
        return 1
    return 2


def _bin_index(adj: float) -> int:
    for i, (lo, hi) in enumerate(DRIFT_BINS):
        if lo <= adj < hi:
            return i
    return len(DRIFT_BINS) - 1  # adj is non-negative, so only inf lands here


def heatmap(records: list[DriftRecord], screening: list[ScreeningRecord]) -> HeatmapTable:
    """Bin drift records by parent-count group and adjusted score."""
    cnt_by_entity = {s.entity: s.parent_cnt for s in screening}
    counts = [[0] * len(DRIFT_BINS) for _ in PARENT_GROUPS]
    for record in records:
        if record.entity not in cnt_by_entity:
            raise ValueError(f"entity Q{record.entity} missing from screening")
        counts[_group_index(cnt_by_entity[record.entity])][_bin_index(record.drift_adj)] += 1
    return HeatmapTable(
        groups=PARENT_GROUPS,
        bins=DRIFT_BINS,
        counts=tuple(tuple(row) for row in counts),
    )
