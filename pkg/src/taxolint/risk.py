"""Per-entity semantic-risk scoring across four structural dimensions.

Dimensions: how many P31/P279 links an entity carries versus corpus
norms, how far its parent classes sit from each other, how unevenly
deep those parents are, and how far the P31 targets sit from the P279
targets.  Each is normalized to [0,1] and combined as a weighted mean.
All functions are pure over the immutable graph and expect relations
to have been cleaned upstream (a policy can additionally mask
technical parents locally).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .core import (
    D_MAX_DEFAULT,
    DistanceMode,
    EdgeKind,
    EntityId,
    MetaclassPolicy,
    TaxonomyGraph,
    bounded_bfs_distance,
)
from .errors import RootMissingError
from .i18n import render, resolve_locale

P31 = EdgeKind.INSTANCE_OF
P279 = EdgeKind.SUBCLASS_OF

DEFAULT_ROOT = 35120  # the conventional top-level class
REF_COUNT_P31 = 1.3
REF_COUNT_P279 = 1.2
COUNT_DIVISOR = 5.0
VARIANCE_DIVISOR = 9.0

# (slug, report attribute) in canonical display order
DIMENSIONS = (
    ("connection", "dim_connection"),
    ("coherence", "dim_coherence"),
    ("depth_variance", "dim_depth_variance"),
    ("alignment", "dim_alignment"),
)


@dataclass(frozen=True)
class RiskWeights:
    """Non-negative dimension weights, renormalized to sum to 1."""

    w_connection: float = 0.25
    w_coherence: float = 0.25
    w_depth_variance: float = 0.25
    w_alignment: float = 0.25

    def __post_init__(self) -> None:
        values = self.as_tuple()
        if any(w < 0 for w in values):
            raise ValueError("weights must be non-negative")
        total = sum(values)
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        if total != 1.0:
            names = ("w_connection", "w_coherence", "w_depth_variance", "w_alignment")
            for name, w in zip(names, values):
                object.__setattr__(self, name, w / total)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w_connection, self.w_coherence, self.w_depth_variance, self.w_alignment)


@dataclass(frozen=True)
class RiskReport:
    """Four normalized dimension scores plus their weighted aggregate.

    ``raw_parent_distances`` holds the measured pairwise parent
    distances with unreachable pairs already capped.  ``parent_depths``
    aligns with the entity's parents ascending; None marks a parent
    that cannot reach the root (excluded from the variance).
    ``cross_distance`` is None when either edge kind is absent or no
    P31/P279 target pair is mutually reachable.
    """

    entity: EntityId
    p31_count: int
    p279_count: int
    dim_connection: float
    dim_coherence: float
    dim_depth_variance: float
    dim_alignment: float
    raw_parent_distances: tuple[int, ...]
    parent_depths: tuple[int | None, ...]
    depth_variance: float
    cross_distance: int | None
    aggregate: float

    def dims(self) -> tuple[float, float, float, float]:
        return (
            self.dim_connection,
            self.dim_coherence,
            self.dim_depth_variance,
            self.dim_alignment,
        )


def _clamp01(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def connection_score(
    p31_count: int,
    p279_count: int,
    ref_p31: float = REF_COUNT_P31,
    ref_p279: float = REF_COUNT_P279,
    divisor: float = COUNT_DIVISOR,
) -> float:
    """Excess link count over the corpus references, clamped to [0,1]."""
    if p31_count < 0 or p279_count < 0:
        raise ValueError("counts must be >= 0")
    s31 = _clamp01((p31_count - ref_p31) / divisor)
    s279 = _clamp01((p279_count - ref_p279) / divisor)
    return max(s31, s279)


def _targets(g: TaxonomyGraph, e: EntityId, kind: EdgeKind,
             policy: MetaclassPolicy | None) -> list[EntityId]:
    out = [int(p) for p in g.parents(e, kind)]
    if policy is not None:
        out = [p for p in out if p not in policy.technical_node_ids]
    return out


def _union_parents(g: TaxonomyGraph, e: EntityId,
                   policy: MetaclassPolicy | None) -> list[EntityId]:
    merged = set(_targets(g, e, P31, policy)) | set(_targets(g, e, P279, policy))
    return sorted(merged)


def coherence_score(
    g: TaxonomyGraph,
    e: EntityId,
    cap: int = D_MAX_DEFAULT,
    policy: MetaclassPolicy | None = None,
    kinds: tuple[EdgeKind, ...] = (P31, P279),
) -> tuple[float, tuple[int, ...]]:
    """Mean pairwise distance among the entity's parents, over the cap.

    Parents default to the union of P31 and P279 targets; ``kinds``
    restricts which edge kinds contribute.  Pairs that cannot reach
    each other within the cap count as the cap.  Fewer than two
    parents scores 0 with no measured pairs.
    """
    merged: set[EntityId] = set()
    for kind in kinds:
        merged.update(_targets(g, e, kind, policy))
    parents = sorted(merged)
    if len(parents) < 2:
        g.ordinal(e)  # still validate the entity
        return 0.0, ()
    distances = []
    for a, b in combinations(parents, 2):
        d = bounded_bfs_distance(g, a, b, cap=cap, mode=DistanceMode.UNDIRECTED_UNION)
        distances.append(cap if d is None else d)
    return (sum(distances) / len(distances)) / cap, tuple(distances)


def upward_depth(g: TaxonomyGraph, e: EntityId, root: EntityId, cap: int) -> int | None:
    """Shortest child->parent hop count from e up to root, both kinds."""
    src, dst = g.ordinal(e), g.ordinal(root)
    if src == dst:
        return 0
    seen = {src}
    frontier = [src]
    depth = 0
    while frontier and depth < cap:
        depth += 1
        nxt = []
        for u in frontier:
            for kind in EdgeKind:
                for v in g.out_ordinals(u, kind):
                    v = int(v)
                    if v == dst:
                        return depth
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
        frontier = nxt
    return None


def depth_map(g: TaxonomyGraph, root: EntityId, cap: int) -> dict[int, int]:
    """Upward depth of every entity that can reach root, as ordinal->hops.

    Single reverse BFS from the root; equals ``upward_depth`` per entity.
    """
    start = g.ordinal(root)
    dist = {start: 0}
    frontier = [start]
    depth = 0
    while frontier and depth < cap:
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


def depth_variance_score(
    g: TaxonomyGraph,
    e: EntityId,
    root: EntityId = DEFAULT_ROOT,
    cap: int = 2 * D_MAX_DEFAULT,
    policy: MetaclassPolicy | None = None,
    depths: dict[int, int] | None = None,
    divisor: float = VARIANCE_DIVISOR,
) -> tuple[float, tuple[int | None, ...], float]:
    """Population variance of parent depths to the root, over 9.

    Parents that cannot reach the root within the cap are reported as
    None and excluded from the variance.  ``depths`` may carry a
    precomputed ``depth_map`` to amortize batch scoring.
    """
    if root not in g:
        raise RootMissingError(root)
    parents = _union_parents(g, e, policy)
    g.ordinal(e)
    if depths is not None:
        parent_depths = tuple(depths.get(g.ordinal(p)) for p in parents)
    else:
        parent_depths = tuple(upward_depth(g, p, root, cap) for p in parents)
    reachable = [d for d in parent_depths if d is not None]
    if not reachable:
        return 0.0, parent_depths, 0.0
    mean = sum(reachable) / len(reachable)
    variance = sum((d - mean) ** 2 for d in reachable) / len(reachable)
    return _clamp01(variance / divisor), parent_depths, variance


def alignment_score(
    g: TaxonomyGraph,
    e: EntityId,
    cap: int = D_MAX_DEFAULT,
    policy: MetaclassPolicy | None = None,
) -> tuple[float, int | None]:
    """Minimum distance between any P31 target and any P279 target.

    Inapplicable (score 0) when either kind has no targets; when no
    pair is mutually reachable within the cap the score saturates at 1.
    """
    p31_targets = _targets(g, e, P31, policy)
    p279_targets = _targets(g, e, P279, policy)
    g.ordinal(e)
    if not p31_targets or not p279_targets:
        return 0.0, None
    best: int | None = None
    for a in p31_targets:
        for b in p279_targets:
            d = bounded_bfs_distance(g, a, b, cap=cap, mode=DistanceMode.UNDIRECTED_UNION)
            if d is not None and (best is None or d < best):
                best = d
                if best == 0:
                    break
        if best == 0:
            break
    if best is None:
        return 1.0, None
    return min(best, cap) / cap, best


def aggregate_risk(
    g: TaxonomyGraph,
    e: EntityId,
    weights: RiskWeights | None = None,
    policy: MetaclassPolicy | None = None,
    root: EntityId = DEFAULT_ROOT,
    d_max: int = D_MAX_DEFAULT,
    depths: dict[int, int] | None = None,
    count_divisor: float = COUNT_DIVISOR,
    variance_divisor: float = VARIANCE_DIVISOR,
) -> RiskReport:
    """All four dimensions and their weighted sum for one entity.

    The connection dimension counts the links attached to the entity
    per kind (its instances and subclasses); the other three work off
    its own parent targets.
    """
    weights = weights or RiskWeights()
    p31_count = g.in_degree(e, P31)
    p279_count = g.in_degree(e, P279)
    dim1 = connection_score(p31_count, p279_count, divisor=count_divisor)
    dim2, raw_distances = coherence_score(g, e, cap=d_max, policy=policy)
    dim3, parent_depths, variance = depth_variance_score(
        g, e, root=root, cap=2 * d_max, policy=policy, depths=depths, divisor=variance_divisor
    )
    dim4, cross = alignment_score(g, e, cap=d_max, policy=policy)
    dims = (dim1, dim2, dim3, dim4)
    aggregate = sum(w * d for w, d in zip(weights.as_tuple(), dims))
    return RiskReport(
        entity=e,
        p31_count=p31_count,
        p279_count=p279_count,
        dim_connection=dim1,
        dim_coherence=dim2,
        dim_depth_variance=dim3,
        dim_alignment=dim4,
        raw_parent_distances=raw_distances,
        parent_depths=parent_depths,
        depth_variance=variance,
        cross_distance=cross,
        aggregate=aggregate,
    )


STRENGTH_BELOW = 0.2
ISSUE_ABOVE = 0.6


@dataclass(frozen=True)
class RiskNarration:
    severity: str  # "strength" | "issue"
    key: str
    params: dict
    text: str


def narrate_risk(report: RiskReport, locale: str = "en") -> list[RiskNarration]:
    """Strength/issue entries per dimension, ordered by descending score.

    Scores below 0.2 read as strengths, above 0.6 as issues; the band
    between stays silent.  Unknown locales fall back to English.
    """
    locale = resolve_locale(locale)
    entries = []
    for index, ((slug, attr), score) in enumerate(zip(DIMENSIONS, report.dims())):
        if score < STRENGTH_BELOW:
            severity = "strength"
        elif score > ISSUE_ABOVE:
            severity = "issue"
        else:
            continue
        key = f"risk.{slug}.{severity}"
        params = {"score": f"{score:.2f}"}
        entries.append((score, index, RiskNarration(severity, key, params, render(key, locale, **params))))
    entries.sort(key=lambda item: (-item[0], item[1]))
    return [entry for _, _, entry in entries]
