"""Delimited report files and the heatmap figure.

Every writer emits a fixed header, canonical row order, and %.6f
floats, so identical inputs produce byte-identical files.  Readers
validate the header and invert the formatting; the server indexes
these files at startup.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

from .cme import AntiPatternFlag
from .core import EntityId, format_qid, parse_qid
from .drift import (
    DriftRecord,
    HeatmapTable,
    RootAggregate,
    ScreeningRecord,
    UNROOTED,
)
from .i18n import render
from .ioutil import atomic_write
from .risk import RiskReport

# canonical artifact names inside a data directory
TRIPLES_TSV = "triples.tsv"
TEXTS_TSV = "texts.tsv"
INGEST_REPORT_JSON = "ingest_report.json"
FLAGS_CSV = "flags.csv"
RISK_CSV = "risk.csv"
DRIFT_CSV = "drift.csv"
ROOTS_CSV = "roots.csv"
HEATMAP_CSV = "heatmap.csv"
HEATMAP_PNG = "heatmap.png"
EMBEDDINGS_DIR = "embeddings"

FLAGS_HEADER = ["qid", "tag", "detail"]
RISK_HEADER = [
    "qid",
    "p31_cnt",
    "p279_cnt",
    "dim_connection",
    "dim_coherence",
    "dim_depth_var",
    "dim_alignment",
    "aggregate",
]
DRIFT_HEADER = ["qid", "parent_cnt", "min_depth", "segment", "drift_raw", "drift_adj", "flagged"]
ROOTS_HEADER = ["root_qid", "cnt", "avg_drift", "p90", "high_ratio"]
HEATMAP_HEADER = ["group", "bin_lo", "bin_hi", "count"]


def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _open_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _read_rows(path: str | Path, header: list[str]) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != header:
        raise ValueError(f"{path} does not start with the header {','.join(header)}")
    return rows[1:]


def write_flags_csv(path: str | Path, flags: list[AntiPatternFlag]) -> None:
    with atomic_write(path) as fh:
        w = _open_writer(fh)
        w.writerow(FLAGS_HEADER)
        for f in flags:
            w.writerow([format_qid(f.entity), f.tag.value, f.detail])


@dataclass(frozen=True)
class FlagRow:
    entity: EntityId
    tag: str
    detail: str


def read_flags_csv(path: str | Path) -> list[FlagRow]:
    return [
        FlagRow(parse_qid(qid), tag, detail)
        for qid, tag, detail in _read_rows(path, FLAGS_HEADER)
    ]


def write_risk_csv(path: str | Path, reports: list[RiskReport]) -> None:
    ordered = sorted(reports, key=lambda r: r.entity)
    with atomic_write(path) as fh:
        w = _open_writer(fh)
        w.writerow(RISK_HEADER)
        for r in ordered:
            w.writerow(
                [
                    format_qid(r.entity),
                    r.p31_count,
                    r.p279_count,
                    _fmt(r.dim_connection),
                    _fmt(r.dim_coherence),
                    _fmt(r.dim_depth_variance),
                    _fmt(r.dim_alignment),
                    _fmt(r.aggregate),
                ]
            )


@dataclass(frozen=True)
class RiskRow:
    entity: EntityId
    p31_cnt: int
    p279_cnt: int
    dim_connection: float
    dim_coherence: float
    dim_depth_var: float
    dim_alignment: float
    aggregate: float

    def dims(self) -> tuple[float, float, float, float]:
        return (self.dim_connection, self.dim_coherence, self.dim_depth_var, self.dim_alignment)


def read_risk_csv(path: str | Path) -> list[RiskRow]:
    out = []
    for qid, p31, p279, d1, d2, d3, d4, agg in _read_rows(path, RISK_HEADER):
        out.append(
            RiskRow(parse_qid(qid), int(p31), int(p279), float(d1), float(d2), float(d3), float(d4), float(agg))
        )
    return out


def write_drift_csv(
    path: str | Path, records: list[DriftRecord], screening: list[ScreeningRecord]
) -> None:
    profile = {s.entity: s for s in screening}
    ordered = sorted(records, key=lambda r: r.entity)
    with atomic_write(path) as fh:
        w = _open_writer(fh)
        w.writerow(DRIFT_HEADER)
        for r in ordered:
            if r.entity not in profile:
                raise ValueError(f"entity Q{r.entity} missing from screening")
            s = profile[r.entity]
            w.writerow(
                [
                    format_qid(r.entity),
                    s.parent_cnt,
                    "" if s.min_depth is None else s.min_depth,
                    s.segment.value,
                    _fmt(r.drift_raw),
                    _fmt(r.drift_adj),
                    "true" if r.flagged else "false",
                ]
            )


@dataclass(frozen=True)
class DriftRow:
    entity: EntityId
    parent_cnt: int
    min_depth: int | None
    segment: str
    drift_raw: float
    drift_adj: float
    flagged: bool


def read_drift_csv(path: str | Path) -> list[DriftRow]:
    out = []
    for qid, cnt, depth, segment, raw, adj, flagged in _read_rows(path, DRIFT_HEADER):
        out.append(
            DriftRow(
                parse_qid(qid),
                int(cnt),
                None if depth == "" else int(depth),
                segment,
                float(raw),
                float(adj),
                flagged == "true",
            )
        )
    return out


def _root_cell(root: EntityId | str) -> str:
    return UNROOTED if root == UNROOTED else format_qid(root)


def write_roots_csv(path: str | Path, aggregates: list[RootAggregate]) -> None:
    with atomic_write(path) as fh:
        w = _open_writer(fh)
        w.writerow(ROOTS_HEADER)
        for a in aggregates:
            w.writerow(
                [_root_cell(a.root), a.cnt, _fmt(a.avg_drift), _fmt(a.p90), _fmt(a.high_ratio)]
            )


def read_roots_csv(path: str | Path) -> list[RootAggregate]:
    out = []
    for root, cnt, avg, p90, ratio in _read_rows(path, ROOTS_HEADER):
        out.append(
            RootAggregate(
                root=UNROOTED if root == UNROOTED else parse_qid(root),
                cnt=int(cnt),
                avg_drift=float(avg),
                p90=float(p90),
                high_ratio=float(ratio),
            )
        )
    return out


def write_heatmap_csv(path: str | Path, table: HeatmapTable) -> None:
    with atomic_write(path) as fh:
        w = _open_writer(fh)
        w.writerow(HEATMAP_HEADER)
        for group, lo, hi, count in table.iter_cells():
            w.writerow([group, _fmt(lo), _fmt(hi), count])


def read_heatmap_csv(path: str | Path) -> HeatmapTable:
    groups: list[str] = []
    bins: list[tuple[float, float]] = []
    cells: dict[str, list[int]] = {}
    for group, lo, hi, count in _read_rows(path, HEATMAP_HEADER):
        if group not in cells:
            groups.append(group)
            cells[group] = []
        edge = (float(lo), float(hi))
        if edge not in bins:
            bins.append(edge)
        cells[group].append(int(count))
    width = len(bins)
    for group, row in cells.items():
        if len(row) != width:
            raise ValueError(f"heatmap group {group} has {len(row)} cells, expected {width}")
    return HeatmapTable(
        groups=tuple(groups),
        bins=tuple(bins),
        counts=tuple(tuple(cells[g]) for g in groups),
    )


def _bin_label(lo: float, hi: float) -> str:
    if math.isinf(hi):
        return f"{lo:g}+"
    return f"[{lo:g},{hi:g})"


def render_heatmap_png(table: HeatmapTable, path: str | Path, locale: str = "en") -> None:
    """Draw the count matrix to a PNG next to the delimited output."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    counts = [[float(c) for c in row] for row in table.counts]
    fig, ax = plt.subplots(figsize=(8, 3.2), dpi=120)
    image = ax.imshow(counts, aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(table.bins)))
    ax.set_xticklabels([_bin_label(lo, hi) for lo, hi in table.bins])
    ax.set_yticks(range(len(table.groups)))
    ax.set_yticklabels(table.groups)
    ax.set_xlabel("adjusted drift")
    ax.set_ylabel("parents")
    ax.set_title(render("ui.heatmap.heading", locale))
    peak = max((max(row) for row in counts), default=0.0)
    for gi, row in enumerate(counts):
        for bi, value in enumerate(row):
            color = "white" if peak and value < 0.5 * peak else "black"
            ax.text(bi, gi, f"{int(value)}", ha="center", va="center", color=color, fontsize=8)
    fig.colorbar(image, ax=ax, shrink=0.85)
    try:
        # hosts without CJK fonts render box glyphs; that is acceptable
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="Glyph .* missing")
            fig.tight_layout()
            fig.savefig(path, format="png")
    finally:
        plt.close(fig)
