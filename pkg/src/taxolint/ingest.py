"""Parsers for triple/text TSV files and Wikidata JSON dump lines,
plus the technical-node exclusion that produces the cleaned relation set.

Two input formats exist on purpose: the triples TSV is the canonical
small-file format every test uses; the entity-per-line JSON dump format
covers real exports.  Parsing is shardable by line ranges because graph
construction is order-insensitive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .core import (
    EdgeKind,
    EntityId,
    EntityText,
    GraphBuilder,
    MetaclassPolicy,
    TaxonomyGraph,
    format_qid,
    parse_qid,
)
from .errors import MalformedLineError
from .ioutil import atomic_write

_KIND_BY_PROPERTY = {kind.value: kind for kind in EdgeKind}


@dataclass(frozen=True)
class TripleRecord:
    child: EntityId
    kind: EdgeKind
    parent: EntityId
    source_line: int = 0


@dataclass
class ParseReport:
    """Line accounting: valid + comments + malformed == lines seen."""

    valid: int = 0
    comments: int = 0
    malformed: int = 0
    malformed_lines: list[int] = field(default_factory=list, repr=False)

    @property
    def total(self) -> int:
        return self.valid + self.comments + self.malformed


def sanitize_text(text: str) -> str:
    """Collapse tabs/newlines to single spaces so TSV round-trips exactly."""
    for ch in ("\t", "\n", "\r"):
        text = text.replace(ch, " ")
    return text


def _decode_lines(stream: IO) -> Iterator[tuple[int, str | None]]:
    """Yield (1-based line number, text or None on a bad-encoding line)."""
    for i, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                yield i, None
                continue
        else:
            line = raw
        yield i, line.rstrip("\r\n")


def parse_triples_tsv(
    stream: IO, report: ParseReport | None = None
) -> Iterator[TripleRecord]:
    """Stream `Q<child>\\tP31|P279\\tQ<parent>` lines into records.

    Blank and `#`-prefixed lines are ignored (counted as comments);
    anything else that fails to parse is counted malformed and skipped.
    Never raises on content, only on stream I/O failure.
    """
    if report is None:
        report = ParseReport()
    for line_no, line in _decode_lines(stream):
        if line is None:
            report.malformed += 1
            report.malformed_lines.append(line_no)
            continue
        if not line.strip() or line.lstrip().startswith("#"):
            report.comments += 1
            continue
        parts = line.split("\t")
        if len(parts) != 3 or parts[1] not in _KIND_BY_PROPERTY:
            report.malformed += 1
            report.malformed_lines.append(line_no)
            continue
        try:
            child = parse_qid(parts[0])
            parent = parse_qid(parts[2])
        except ValueError:
            report.malformed += 1
            report.malformed_lines.append(line_no)
            continue
        report.valid += 1
        yield TripleRecord(child, _KIND_BY_PROPERTY[parts[1]], parent, line_no)


def read_triples(path: str | Path, report: ParseReport | None = None) -> TaxonomyGraph:
    """Parse a triples TSV file into a graph."""
    builder = GraphBuilder()
    with open(path, "rb") as fh:
        for rec in parse_triples_tsv(fh, report):
            builder.add(rec.child, rec.kind, rec.parent)
    return builder.finalize()


def write_triples(g: TaxonomyGraph, path: str | Path) -> None:
    """Serialize every stored edge; re-parsing yields an identical graph."""
    with atomic_write(path) as fh:
        for child, kind, parent in g.edges():
            fh.write(f"{format_qid(child)}\t{kind.value}\t{format_qid(parent)}\n")


def parse_texts_tsv(
    stream: IO, report: ParseReport | None = None
) -> Iterator[EntityText]:
    """Stream `<qid>\\t<lang>\\t<label>\\t<description>` lines."""
    if report is None:
        report = ParseReport()
    for line_no, line in _decode_lines(stream):
        if line is None:
            report.malformed += 1
            report.malformed_lines.append(line_no)
            continue
        if not line.strip() or line.lstrip().startswith("#"):
            report.comments += 1
            continue
        parts = line.split("\t")
        if len(parts) != 4 or not parts[1]:
            report.malformed += 1
            report.malformed_lines.append(line_no)
            continue
        try:
            entity = parse_qid(parts[0])
        except ValueError:
            report.malformed += 1
            report.malformed_lines.append(line_no)
            continue
        report.valid += 1
        yield EntityText(entity, parts[1], parts[2], parts[3])


def read_texts(path: str | Path, report: ParseReport | None = None) -> list[EntityText]:
    with open(path, "rb") as fh:
        return list(parse_texts_tsv(fh, report))


def write_texts(texts: Iterable[EntityText], path: str | Path) -> None:
    with atomic_write(path) as fh:
        for t in texts:
            fh.write(
                f"{format_qid(t.entity)}\t{sanitize_text(t.language)}"
                f"\t{sanitize_text(t.label)}\t{sanitize_text(t.description)}\n"
            )


# -- Wikidata JSON dump -----------------------------------------------


def _claim_targets(entity: dict, prop: str) -> Iterator[EntityId]:
    for claim in entity.get("claims", {}).get(prop, []):
        if claim.get("rank", "normal") not in ("normal", "preferred"):
            continue
        snak = claim.get("mainsnak", {})
        if snak.get("snaktype") != "value":
            continue
        value = snak.get("datavalue", {}).get("value")
        if not isinstance(value, dict) or value.get("entity-type") != "item":
            continue
        numeric = value.get("numeric-id")
        if isinstance(numeric, int) and numeric >= 1:
            yield numeric
        elif isinstance(value.get("id"), str):
            try:
                yield parse_qid(value["id"])
            except ValueError:
                continue


def extract_entity(
    entity: dict, language: str = "en", source_line: int = 0
) -> tuple[list[TripleRecord], EntityText]:
    """Pull P31/P279 edges and one language's texts from an entity object.

    The same JSON shape arrives from dump lines and from the live API.
    """
    qid = parse_qid(entity.get("id", ""))
    edges = [
        TripleRecord(qid, kind, target, source_line)
        for kind in EdgeKind
        for target in _claim_targets(entity, kind.value)
    ]
    label = entity.get("labels", {}).get(language, {}).get("value", "")
    description = entity.get("descriptions", {}).get(language, {}).get("value", "")
    text_rec = EntityText(
        qid, language, sanitize_text(label), sanitize_text(description)
    )
    return edges, text_rec


def parse_dump_line(
    line: str, language: str = "en", source_line: int = 0
) -> tuple[list[TripleRecord], EntityText | None]:
    """Parse one line of an entity-per-line JSON dump.

    Array delimiter lines ("[", "]") and non-item entities yield
    nothing.  P31/P279 claim targets become edges; the label and
    description for ``language`` are extracted, empty when missing.
    Deprecated-rank claims are skipped.
    """
    text = line.strip().strip(",").strip()
    if text in ("", "[", "]"):
        return [], None
    try:
        entity = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedLineError(f"line {source_line}: bad JSON: {exc}") from exc
    if not isinstance(entity, dict):
        raise MalformedLineError(f"line {source_line}: not a JSON object")
    if entity.get("type") != "item":
        return [], None
    try:
        return extract_entity(entity, language, source_line)
    except ValueError as exc:
        raise MalformedLineError(f"line {source_line}: bad entity id") from exc


def read_dump(
    path: str | Path, language: str = "en", report: ParseReport | None = None
) -> tuple[TaxonomyGraph, list[EntityText]]:
    """Parse a whole dump file; malformed lines are counted and skipped."""
    if report is None:
        report = ParseReport()
    builder = GraphBuilder()
    texts = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for line_no, line in enumerate(fh, start=1):
            try:
                edges, text = parse_dump_line(line, language, line_no)
            except MalformedLineError:
                report.malformed += 1
                report.malformed_lines.append(line_no)
                continue
            if not edges and text is None:
                report.comments += 1
                continue
            report.valid += 1
            for rec in edges:
                builder.add(rec.child, rec.kind, rec.parent)
            if text is not None:
                builder.add_node(text.entity)
                texts.append(text)
    return builder.finalize(), texts


# -- technical-node exclusion ------------------------------------------


@dataclass(frozen=True)
class CleanedRelations:
    """Graph with technical parents removed, plus how many edges that cut."""

    graph: TaxonomyGraph
    excluded_edge_count: int


def clean_relations(g: TaxonomyGraph, policy: MetaclassPolicy) -> CleanedRelations:
    """Drop every edge whose parent is a technical classification node.

    Child-side occurrences of technical nodes survive; the node set is
    preserved.  Idempotent.
    """
    technical = policy.technical_node_ids
    builder = GraphBuilder()
    excluded = 0
    for child, kind, parent in g.edges():
        if parent in technical:
            excluded += 1
        else:
            builder.add(child, kind, parent)
    for entity in g.nodes():
        builder.add_node(int(entity))
    return CleanedRelations(builder.finalize(), excluded)
