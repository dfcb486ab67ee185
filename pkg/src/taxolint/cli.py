"""Command line front end tying the analysis stages together.

Each subcommand reads and writes artifacts in one data directory
(``--out``), so a full run is a chain of invocations over the same
directory.  Exit codes: 0 success, 2 unreadable input or usage error,
3 missing upstream artifact, 4 embedding provider failure, 5 cannot
bind the requested address.
"""

from __future__ import annotations

import json
import os
import socket
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import NoReturn

import click

from . import report as rpt
from .cme import detect_anti_patterns
from .config import PipelineConfig, load_config_file, resolve_config
from .core import EdgeKind, TaxonomyGraph
from .drift import (
    DriftRecord,
    ScreeningRecord,
    Segment,
    aggregate_by_root,
    assign_pseudo_roots,
    heatmap,
    screen,
    score_drift,
)
from .embedding import EmbeddingCache
from .errors import ProviderUnavailableError, RootMissingError, UnknownEntityError
from .ingest import (
    CleanedRelations,
    ParseReport,
    clean_relations,
    read_dump,
    read_texts,
    read_triples,
    write_texts,
    write_triples,
)
from .risk import aggregate_risk, depth_map

P31 = EdgeKind.INSTANCE_OF
P279 = EdgeKind.SUBCLASS_OF

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_PROVIDER = 4
EXIT_BIND = 5


def _fail(code: int, message: str) -> NoReturn:
    click.echo(f"taxolint: {message}", err=True)
    sys.exit(code)


def _resolve(config_path: str | None, **overrides) -> PipelineConfig:
    file_values = None
    if config_path is not None:
        try:
            file_values = load_config_file(config_path)
        except OSError as exc:
            _fail(EXIT_USAGE, f"cannot read config file: {exc}")
        except ValueError as exc:
            _fail(EXIT_USAGE, str(exc))
    try:
        return resolve_config(file_values, overrides)
    except ValueError as exc:
        _fail(EXIT_USAGE, str(exc))


def _artifact(cfg: PipelineConfig, name: str, producer: str) -> Path:
    path = Path(cfg.out) / name
    if not path.is_file():
        _fail(EXIT_MISSING, f"{path} not found; run `taxolint {producer}` first")
    return path


def _load_graph(cfg: PipelineConfig) -> TaxonomyGraph:
    path = _artifact(cfg, rpt.TRIPLES_TSV, "ingest")
    try:
        return read_triples(path)
    except OSError as exc:
        _fail(EXIT_USAGE, f"cannot read {path}: {exc}")


def _load_clean(cfg: PipelineConfig) -> CleanedRelations:
    try:
        return clean_relations(_load_graph(cfg), cfg.policy())
    except (OSError, ValueError) as exc:
        _fail(EXIT_USAGE, str(exc))


def _rows_to_records(
    rows: list[rpt.DriftRow],
) -> tuple[list[DriftRecord], list[ScreeningRecord]]:
    """Rebuild drift and screening records from their serialized rows."""
    records = [
        DriftRecord(r.entity, r.parent_cnt, r.drift_raw, r.drift_adj, r.flagged)
        for r in rows
    ]
    screening = [
        ScreeningRecord(r.entity, r.parent_cnt, r.min_depth, Segment(r.segment))
        for r in rows
    ]
    return records, screening


_CONFIG_OPT = click.option(
    "--config",
    "config_path",
    default=None,
    metavar="FILE",
    help="Flat key=value config file; explicit flags win over it.",
)
_OUT_OPT = click.option(
    "--out", default=None, metavar="DIR", help="Data directory for artifacts (default .)."
)


@click.group()
def main() -> None:
    """Taxonomy hygiene checks over entity relation snapshots."""


@main.command()
@click.option("--triples", default=None, metavar="FILE", help="Tab-separated relation triples.")
@click.option("--dump", default=None, metavar="FILE", help="JSON-lines entity dump.")
@click.option("--texts", default=None, metavar="FILE", help="Tab-separated label/description rows.")
@click.option("--locale", default=None, help="Language to pull labels from a dump.")
@_OUT_OPT
@_CONFIG_OPT
def ingest(triples, dump, texts, locale, out, config_path) -> None:
    """Parse raw inputs into the graph and text artifacts."""
    cfg = _resolve(
        config_path, triples=triples, dump=dump, texts=texts, locale=locale, out=out
    )
    if (cfg.triples is None) == (cfg.dump is None):
        raise click.UsageError("exactly one of --triples or --dump is required")

    edge_report = ParseReport()
    text_report = ParseReport()
    text_rows = []
    try:
        if cfg.triples is not None:
            g = read_triples(cfg.triples, edge_report)
            if cfg.texts is not None:
                text_rows = read_texts(cfg.texts, text_report)
        else:
            g, text_rows = read_dump(cfg.dump, language=cfg.locale, report=edge_report)
    except OSError as exc:
        _fail(EXIT_USAGE, f"cannot read input: {exc}")

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_triples(g, out_dir / rpt.TRIPLES_TSV)
    write_texts(text_rows, out_dir / rpt.TEXTS_TSV)

    loops = len(g.self_loop_entities(P31)) + len(g.self_loop_entities(P279))
    edges = g.edge_count(P31) + g.edge_count(P279) + loops
    summary = {
        "nodes": g.node_count,
        "edges": edges,
        "self_loops": loops,
        "texts": len(text_rows),
        "input_lines": {
            "valid": edge_report.valid,
            "comments": edge_report.comments,
            "malformed": edge_report.malformed,
            "malformed_lines": edge_report.malformed_lines,
        },
        "text_lines": {
            "valid": text_report.valid,
            "comments": text_report.comments,
            "malformed": text_report.malformed,
            "malformed_lines": text_report.malformed_lines,
        },
    }
    (out_dir / rpt.INGEST_REPORT_JSON).write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8"
    )
    click.echo(
        f"ingested {edges} edges, {g.node_count} nodes, {len(text_rows)} text rows"
        f" ({edge_report.malformed + text_report.malformed} malformed lines skipped)",
        err=True,
    )


@main.command()
@click.option("--max-paths", type=int, default=None, help="Redundant-edge witness limit.")
@click.option("--policy", "policy_file", default=None, metavar="FILE", help="JSON policy overrides.")
@_OUT_OPT
@_CONFIG_OPT
def cme(max_paths, policy_file, out, config_path) -> None:
    """Flag structural anti-patterns and write flags.csv."""
    cfg = _resolve(config_path, max_paths=max_paths, policy_file=policy_file, out=out)
    if cfg.max_paths < 1:
        raise click.UsageError("--max-paths must be at least 1")
    g = _load_graph(cfg)
    try:
        policy = cfg.policy()
    except (OSError, ValueError) as exc:
        _fail(EXIT_USAGE, str(exc))
    flags = detect_anti_patterns(g, policy=policy, max_paths=cfg.max_paths, depth_cap=cfg.d_max)
    rpt.write_flags_csv(Path(cfg.out) / rpt.FLAGS_CSV, flags)
    click.echo(f"flagged {len(flags)} anti-pattern findings", err=True)


@main.command()
@click.option("--root", default=None, metavar="QID", help="Depth reference root entity.")
@click.option("--jobs", type=int, default=None, help="Worker threads (default: all cores).")
@click.option("--policy", "policy_file", default=None, metavar="FILE", help="JSON policy overrides.")
@_OUT_OPT
@_CONFIG_OPT
def score(root, jobs, policy_file, out, config_path) -> None:
    """Score every entity on the four risk dimensions into risk.csv."""
    cfg = _resolve(config_path, root=root, jobs=jobs, policy_file=policy_file, out=out)
    clean = _load_clean(cfg)
    g = clean.graph
    try:
        depths = depth_map(g, cfg.root, cap=cfg.d_max)
    except (RootMissingError, UnknownEntityError):
        _fail(EXIT_USAGE, f"root entity Q{cfg.root} is not in the graph")
    weights = cfg.weights()
    policy = cfg.policy()

    def one(entity: int):
        return aggregate_risk(
            g,
            entity,
            weights=weights,
            policy=policy,
            root=cfg.root,
            d_max=cfg.d_max,
            depths=depths,
            count_divisor=cfg.count_divisor,
            variance_divisor=cfg.variance_divisor,
        )

    entities = [int(e) for e in g.nodes()]
    workers = cfg.effective_jobs()
    if workers > 1 and len(entities) > 256:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(one, entities))
    else:
        reports = [one(e) for e in entities]
    rpt.write_risk_csv(Path(cfg.out) / rpt.RISK_CSV, reports)
    click.echo(f"scored {len(reports)} entities", err=True)


@main.command()
@click.option("--provider", default=None, type=click.Choice(["offline", "remote"]))
@click.option("--endpoint", default=None, metavar="URL", help="Remote embedding service base URL.")
@click.option("--threshold", type=float, default=None, help="Adjusted-drift flag threshold.")
@click.option("--dimension", type=int, default=None, help="Embedding vector width.")
@click.option("--policy", "policy_file", default=None, metavar="FILE", help="JSON policy overrides.")
@_OUT_OPT
@_CONFIG_OPT
def drift(provider, endpoint, threshold, dimension, policy_file, out, config_path) -> None:
    """Score label drift for multi-parent entities into drift.csv."""
    cfg = _resolve(
        config_path,
        provider=provider,
        endpoint=endpoint,
        drift_threshold=threshold,
        dimension=dimension,
        policy_file=policy_file,
        out=out,
    )
    clean = _load_clean(cfg)
    texts_path = _artifact(cfg, rpt.TEXTS_TSV, "ingest")
    try:
        text_rows = read_texts(texts_path)
    except OSError as exc:
        _fail(EXIT_USAGE, f"cannot read {texts_path}: {exc}")
    try:
        emb_provider = cfg.make_provider()
    except ValueError as exc:
        _fail(EXIT_USAGE, str(exc))

    screening, discarded = screen(clean)
    cache = EmbeddingCache.for_provider(Path(cfg.out) / rpt.EMBEDDINGS_DIR, emb_provider)
    texts = {t.entity: t for t in text_rows}
    try:
        records, skipped = score_drift(
            clean, screening, texts, emb_provider, cache=cache, threshold=cfg.drift_threshold
        )
    except ProviderUnavailableError as exc:
        _fail(EXIT_PROVIDER, f"embedding provider unavailable: {exc}")
    rpt.write_drift_csv(Path(cfg.out) / rpt.DRIFT_CSV, records, screening)
    flagged = sum(1 for r in records if r.flagged)
    click.echo(
        f"scored drift for {len(records)} entities ({flagged} flagged,"
        f" {len(skipped)} without usable text, {discarded} single-parent)",
        err=True,
    )


@main.command()
@click.option("--threshold", type=float, default=None, help="High-drift ratio threshold.")
@click.option("--policy", "policy_file", default=None, metavar="FILE", help="JSON policy overrides.")
@_OUT_OPT
@_CONFIG_OPT
def aggregate(threshold, policy_file, out, config_path) -> None:
    """Roll drift records up to their nearest pseudo-roots (roots.csv)."""
    cfg = _resolve(config_path, drift_threshold=threshold, policy_file=policy_file, out=out)
    drift_path = _artifact(cfg, rpt.DRIFT_CSV, "drift")
    try:
        rows = rpt.read_drift_csv(drift_path)
    except ValueError as exc:
        _fail(EXIT_USAGE, f"{drift_path}: {exc}")
    records, _ = _rows_to_records(rows)
    clean = _load_clean(cfg)
    roots = assign_pseudo_roots(clean)
    try:
        aggregates = aggregate_by_root(records, roots, threshold=cfg.drift_threshold)
    except ValueError as exc:
        _fail(EXIT_USAGE, str(exc))
    rpt.write_roots_csv(Path(cfg.out) / rpt.ROOTS_CSV, aggregates)
    click.echo(f"aggregated {len(records)} records under {len(aggregates)} roots", err=True)


@main.command(name="heatmap")
@click.option("--locale", default=None, help="Language for the rendered labels.")
@_OUT_OPT
@_CONFIG_OPT
def heatmap_cmd(locale, out, config_path) -> None:
    """Bin drift scores into heatmap.csv and render heatmap.png."""
    cfg = _resolve(config_path, locale=locale, out=out)
    drift_path = _artifact(cfg, rpt.DRIFT_CSV, "drift")
    try:
        rows = rpt.read_drift_csv(drift_path)
    except ValueError as exc:
        _fail(EXIT_USAGE, f"{drift_path}: {exc}")
    records, screening = _rows_to_records(rows)
    table = heatmap(records, screening)
    rpt.write_heatmap_csv(Path(cfg.out) / rpt.HEATMAP_CSV, table)
    rpt.render_heatmap_png(table, Path(cfg.out) / rpt.HEATMAP_PNG, locale=cfg.locale)
    click.echo(f"binned {table.total()} records into the heatmap grid", err=True)


@main.command()
@click.option("--host", default=None, help="Bind address (default 127.0.0.1).")
@click.option("--port", type=int, default=None, help="Bind port (default 8000).")
@click.option("--data-dir", default=None, metavar="DIR", help="Artifact directory to serve.")
@_CONFIG_OPT
def serve(host, port, data_dir, config_path) -> None:
    """Serve the HTTP API over a previously built data directory."""
    if data_dir is None:
        data_dir = os.environ.get("TAXOLINT_DATA_DIR") or None
    cfg = _resolve(config_path, host=host, port=port, out=data_dir)
    from .server import create_app

    data = Path(cfg.out)
    if not data.is_dir():
        _fail(EXIT_MISSING, f"data directory {data} does not exist")
    console = Path("frontend/dist")
    app = create_app(data, config=cfg, console_dir=console if console.is_dir() else None)
    snapshot = app.state.holder.get()
    stats = snapshot.stats_line() if snapshot is not None else "empty snapshot"

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((cfg.host, cfg.port))
    except OSError as exc:
        sock.close()
        _fail(EXIT_BIND, f"cannot bind {cfg.host}:{cfg.port}: {exc}")

    click.echo(f"serving {stats} on http://{cfg.host}:{cfg.port}", err=True)
    import uvicorn

    config = uvicorn.Config(app, host=cfg.host, port=cfg.port, log_level="warning")
    try:
        uvicorn.Server(config).run(sockets=[sock])
    finally:
        sock.close()


if __name__ == "__main__":
    main()
