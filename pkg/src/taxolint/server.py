"""Read-only HTTP API over a built artifact directory.

Scores come precomputed from the CSV artifacts and are indexed in
memory at startup; the request path only ever computes single-entity
diagnostics.  The loaded snapshot is immutable; a reload swaps the
whole object at once, so no request observes a half-loaded store.
Batch work goes through POST /api/scan, which runs on a small worker
pool and persists job records across restarts.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import report as rpt
from .cme import detect_anti_patterns, entity_redundancy, weakly_connected_components
from .config import PipelineConfig
from .core import EdgeKind, EntityText, TaxonomyGraph, format_qid, parse_qid
from .drift import screen, score_drift
from .embedding import EmbeddingCache, compose_text, embed_many
from .errors import (
    EmptyTextError,
    NetworkError,
    ProviderUnavailableError,
    RateLimitedError,
    UnknownEntityError,
    UnknownQidError,
)
from .i18n import load_catalog, resolve_locale, validate_catalogs
from .ingest import clean_relations, read_texts, read_triples
from .ioutil import atomic_write
from .live import OFFLINE_ENV, LiveClient
from .risk import aggregate_risk, depth_map, narrate_risk

P31 = EdgeKind.INSTANCE_OF
P279 = EdgeKind.SUBCLASS_OF

API_VERSION = 1
JOBS_DIR = "jobs"
SCAN_STAGES = ("risk", "cme", "drift")


@dataclass(frozen=True)
class AnalysisSnapshot:
    """Immutable in-memory index of one data directory's artifacts."""

    data_dir: Path
    graph: TaxonomyGraph
    texts: dict[int, EntityText]
    risk: dict[int, rpt.RiskRow]
    drift: dict[int, rpt.DriftRow]
    flags: dict[int, tuple]
    roots: tuple | None
    heat: object | None

    def stats_line(self) -> str:
        g = self.graph
        edges = (
            g.edge_count(P31)
            + g.edge_count(P279)
            + len(g.self_loop_entities(P31))
            + len(g.self_loop_entities(P279))
        )
        return (
            f"{g.node_count} nodes, {edges} edges, {len(self.texts)} texts,"
            f" {len(self.risk)} risk rows, {len(self.drift)} drift rows,"
            f" {sum(len(v) for v in self.flags.values())} flags"
        )


def build_snapshot(data_dir: str | Path) -> AnalysisSnapshot | None:
    """Index whatever artifacts the directory holds; None without a graph."""
    validate_catalogs()
    data_dir = Path(data_dir)
    triples = data_dir / rpt.TRIPLES_TSV
    if not triples.is_file():
        return None
    graph = read_triples(triples)

    texts: dict[int, EntityText] = {}
    texts_path = data_dir / rpt.TEXTS_TSV
    if texts_path.is_file():
        for row in read_texts(texts_path):
            texts[row.entity] = row

    risk: dict[int, rpt.RiskRow] = {}
    risk_path = data_dir / rpt.RISK_CSV
    if risk_path.is_file():
        for r in rpt.read_risk_csv(risk_path):
            risk[r.entity] = r

    drift: dict[int, rpt.DriftRow] = {}
    drift_path = data_dir / rpt.DRIFT_CSV
    if drift_path.is_file():
        for d in rpt.read_drift_csv(drift_path):
            drift[d.entity] = d

    flags: dict[int, list] = {}
    flags_path = data_dir / rpt.FLAGS_CSV
    if flags_path.is_file():
        for f in rpt.read_flags_csv(flags_path):
            flags.setdefault(f.entity, []).append(f)

    roots = None
    roots_path = data_dir / rpt.ROOTS_CSV
    if roots_path.is_file():
        roots = tuple(rpt.read_roots_csv(roots_path))

    heat = None
    heat_path = data_dir / rpt.HEATMAP_CSV
    if heat_path.is_file():
        heat = rpt.read_heatmap_csv(heat_path)

    return AnalysisSnapshot(
        data_dir=data_dir,
        graph=graph,
        texts=texts,
        risk=risk,
        drift=drift,
        flags={e: tuple(v) for e, v in flags.items()},
        roots=roots,
        heat=heat,
    )


class SnapshotHolder:
    """Atomic get/swap around the served snapshot."""

    def __init__(self, snapshot: AnalysisSnapshot | None = None):
        self._lock = threading.Lock()
        self._snapshot = snapshot

    def get(self) -> AnalysisSnapshot | None:
        with self._lock:
            return self._snapshot

    def swap(self, snapshot: AnalysisSnapshot | None) -> None:
        with self._lock:
            self._snapshot = snapshot


@dataclass
class ScanJob:
    id: str
    spec: dict
    state: str = "queued"  # queued -> running -> done | failed
    progress: float = 0.0
    result_path: str | None = None
    error: str | None = None

    def public(self) -> dict:
        return {
            "id": self.id,
            "spec": self.spec,
            "state": self.state,
            "progress": self.progress,
            "result_path": self.result_path,
            "error": self.error,
        }


class JobRegistry:
    """Bounded background scan runner with on-disk job records."""

    def __init__(self, data_dir: Path, holder: SnapshotHolder, config: PipelineConfig, max_jobs: int):
        self.data_dir = data_dir
        self.holder = holder
        self.config = config
        self.max_jobs = max_jobs
        self._lock = threading.Lock()
        self._jobs: dict[str, ScanJob] = {}
        self._pool = ThreadPoolExecutor(max_workers=max_jobs, thread_name_prefix="scan")
        self._restore()

    # -- persistence --------------------------------------------------

    def _record_path(self, job_id: str) -> Path:
        return self.data_dir / JOBS_DIR / f"{job_id}.json"

    def _persist(self, job: ScanJob) -> None:
        with atomic_write(self._record_path(job.id)) as fh:
            json.dump(job.public(), fh, indent=2)

    def _restore(self) -> None:
        jobs_dir = self.data_dir / JOBS_DIR
        if not jobs_dir.is_dir():
            return
        for path in sorted(jobs_dir.glob("*.json")):
            try:
                record = json.loads(path.read_text(encoding="utf-8"))
                job = ScanJob(
                    id=record["id"],
                    spec=record.get("spec", {}),
                    state=record.get("state", "failed"),
                    progress=float(record.get("progress", 0.0)),
                    result_path=record.get("result_path"),
                    error=record.get("error"),
                )
            except (ValueError, KeyError, TypeError):
                continue
            if job.state in ("queued", "running"):
                job.state = "failed"
                job.error = "interrupted by server restart"
                self._persist(job)
            self._jobs[job.id] = job

    # -- lifecycle ----------------------------------------------------

    def get(self, job_id: str) -> ScanJob | None:
        with self._lock:
            return self._jobs.get(job_id)

    def submit(self, spec: dict) -> ScanJob | None:
        """Queue a job, or None when the runner is already full."""
        with self._lock:
            active = sum(1 for j in self._jobs.values() if j.state in ("queued", "running"))
            if active >= self.max_jobs:
                return None
            job = ScanJob(id=uuid.uuid4().hex, spec=spec)
            self._jobs[job.id] = job
        self._persist(job)
        self._pool.submit(self._run, job)
        return job

    def _set(self, job: ScanJob, **updates) -> None:
        with self._lock:
            for key, value in updates.items():
                setattr(job, key, value)
        self._persist(job)

    def _run(self, job: ScanJob) -> None:
        self._set(job, state="running")
        try:
            result_dir = self._execute(job)
        except Exception as exc:  # job must record any failure, not raise
            self._set(job, state="failed", error=str(exc))
            return
        self._set(job, state="done", progress=1.0, result_path=str(result_dir))

    def _entities_for(self, spec: dict, snapshot: AnalysisSnapshot) -> list[int]:
        if "component" in spec:
            labeling = weakly_connected_components(snapshot.graph)
            wanted = int(spec["component"])
            if wanted not in labeling.component_sizes:
                raise ValueError(f"unknown component id {wanted}")
            return sorted(e for e, c in labeling.component_of.items() if c == wanted)
        entities = [parse_qid(q) if isinstance(q, str) else int(q) for q in spec["entities"]]
        missing = [e for e in entities if e not in snapshot.graph]
        if missing:
            raise UnknownEntityError(missing[0])
        return entities

    def _execute(self, job: ScanJob) -> Path:
        snapshot = self.holder.get()
        if snapshot is None:
            raise RuntimeError("no snapshot loaded")
        entities = self._entities_for(job.spec, snapshot)
        stages = list(job.spec["stages"])
        result_dir = self.data_dir / JOBS_DIR / job.id
        result_dir.mkdir(parents=True, exist_ok=True)

        cfg = self.config
        g = snapshot.graph
        done = 0
        for stage in stages:
            if stage == "risk":
                depths = depth_map(g, cfg.root, cap=cfg.d_max) if cfg.root in g else None
                reports = [
                    aggregate_risk(
                        g,
                        e,
                        weights=cfg.weights(),
                        policy=cfg.policy(),
                        root=cfg.root,
                        d_max=cfg.d_max,
                        depths=depths,
                        count_divisor=cfg.count_divisor,
                        variance_divisor=cfg.variance_divisor,
                    )
                    for e in entities
                ]
                rpt.write_risk_csv(result_dir / rpt.RISK_CSV, reports)
            elif stage == "cme":
                wanted = set(entities)
                flags = [
                    f
                    for f in detect_anti_patterns(
                        g, policy=cfg.policy(), max_paths=cfg.max_paths, depth_cap=cfg.d_max
                    )
                    if f.entity in wanted
                ]
                rpt.write_flags_csv(result_dir / rpt.FLAGS_CSV, flags)
            elif stage == "drift":
                clean = clean_relations(g, cfg.policy())
                wanted = set(entities)
                screening, _ = screen(clean)
                screening = [s for s in screening if s.entity in wanted]
                provider = cfg.make_provider()
                cache = EmbeddingCache.for_provider(
                    self.data_dir / rpt.EMBEDDINGS_DIR, provider
                )
                records, _ = score_drift(
                    clean,
                    screening,
                    snapshot.texts,
                    provider,
                    cache=cache,
                    threshold=cfg.drift_threshold,
                )
                rpt.write_drift_csv(result_dir / rpt.DRIFT_CSV, records, screening)
            else:
                raise ValueError(f"unknown stage {stage!r}")
            done += 1
            self._set(job, progress=done / len(stages))
        return result_dir

    def shutdown(self) -> None:
        self._pool.shutdown(wait=False, cancel_futures=True)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"error": {"code": code, "message": message}}, status_code=status)


def _offline() -> bool:
    return os.environ.get(OFFLINE_ENV, "") == "1"


def _text_or_none(text: EntityText | None) -> str | None:
    if text is None:
        return None
    try:
        return compose_text(text.label, text.description)
    except EmptyTextError:
        return None


def create_app(
    data_dir: str | Path,
    snapshot: AnalysisSnapshot | None = None,
    config: PipelineConfig | None = None,
    console_dir: str | Path | None = None,
    max_jobs: int | None = None,
    live_client: LiveClient | None = None,
) -> FastAPI:
    """Wire the API over one data directory.

    ``snapshot`` short-circuits loading (pass the result of
    build_snapshot); ``live_client`` swaps the Wikidata client, which
    tests use to stay off the network.
    """
    data_dir = Path(data_dir)
    config = config or PipelineConfig()
    if snapshot is None:
        snapshot = build_snapshot(data_dir)
    else:
        validate_catalogs()
    holder = SnapshotHolder(snapshot)
    registry = JobRegistry(
        data_dir, holder, config, max_jobs if max_jobs is not None else config.scan_jobs
    )

    app = FastAPI(title="taxolint", openapi_url=None, docs_url=None, redoc_url=None)
    app.state.holder = holder
    app.state.registry = registry
    app.state.config = config

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request: Request, exc: StarletteHTTPException):
        return _error(exc.status_code, "HTTPError", str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return _error(400, "ValidationError", str(exc.errors()[:1]))

    def _provider_and_cache():
        provider = config.make_provider()
        cache = EmbeddingCache.for_provider(data_dir / rpt.EMBEDDINGS_DIR, provider)
        return provider, cache

    @app.get("/api/entity/{qid}")
    def entity_summary(qid: str, locale: str = "en"):
        try:
            e = parse_qid(qid)
        except ValueError as exc:
            return _error(400, "MalformedId", str(exc))
        snap = holder.get()
        if snap is None:
            return _error(503, "SnapshotNotLoaded", "no analysis snapshot is loaded")

        if e in snap.graph:
            g = snap.graph
            text = snap.texts.get(e)
            risk_row = snap.risk.get(e)
            drift_row = snap.drift.get(e)
            narrations = [
                {"severity": n.severity, "key": n.key, "text": n.text}
                for n in (narrate_risk(risk_row, locale=locale) if risk_row else [])
            ]
            return {
                "api": API_VERSION,
                "qid": format_qid(e),
                "source": "snapshot",
                "label": text.label if text else None,
                "description": text.description if text else None,
                "language": text.language if text else None,
                "parents": {
                    "P31": [format_qid(int(p)) for p in g.parents(e, P31)],
                    "P279": [format_qid(int(p)) for p in g.parents(e, P279)],
                },
                "risk": (
                    {
                        "p31_cnt": risk_row.p31_cnt,
                        "p279_cnt": risk_row.p279_cnt,
                        "dim_connection": risk_row.dim_connection,
                        "dim_coherence": risk_row.dim_coherence,
                        "dim_depth_var": risk_row.dim_depth_var,
                        "dim_alignment": risk_row.dim_alignment,
                        "aggregate": risk_row.aggregate,
                    }
                    if risk_row
                    else None
                ),
                "drift": (
                    {
                        "parent_cnt": drift_row.parent_cnt,
                        "min_depth": drift_row.min_depth,
                        "segment": drift_row.segment,
                        "drift_raw": drift_row.drift_raw,
                        "drift_adj": drift_row.drift_adj,
                        "flagged": drift_row.flagged,
                    }
                    if drift_row
                    else None
                ),
                "narrations": narrations,
                "flags": [
                    {"tag": f.tag, "detail": f.detail} for f in snap.flags.get(e, ())
                ],
            }

        if _offline():
            return _error(404, "UnknownEntity", f"{format_qid(e)} is not in the snapshot")
        client = live_client or LiveClient(
            cache_dir=data_dir / "live_cache", language=resolve_locale(locale)
        )
        try:
            triples, text = client.fetch(e)
        except UnknownQidError:
            return _error(404, "UnknownEntity", f"{format_qid(e)} does not exist")
        except RateLimitedError as exc:
            return _error(429, "RateLimited", str(exc))
        except NetworkError as exc:
            return _error(502, "LiveFetchFailed", str(exc))
        return {
            "api": API_VERSION,
            "qid": format_qid(e),
            "source": "live",
            "label": text.label,
            "description": text.description,
            "language": text.language,
            "parents": {
                "P31": [format_qid(t.parent) for t in triples if t.kind is P31],
                "P279": [format_qid(t.parent) for t in triples if t.kind is P279],
            },
            "risk": None,
            "drift": None,
            "narrations": [],
            "flags": [],
        }

    @app.get("/api/entity/{qid}/redundancy")
    def redundancy(qid: str, max_paths: int = 8):
        try:
            e = parse_qid(qid)
        except ValueError as exc:
            return _error(400, "MalformedId", str(exc))
        if not 1 <= max_paths <= 64:
            return _error(400, "MaxPathsOutOfRange", "max_paths must be between 1 and 64")
        snap = holder.get()
        if snap is None:
            return _error(503, "SnapshotNotLoaded", "no analysis snapshot is loaded")
        if e not in snap.graph:
            return _error(404, "UnknownEntity", f"{format_qid(e)} is not in the snapshot")
        findings = entity_redundancy(snap.graph, e, max_paths=max_paths, depth_cap=config.d_max)
        return {
            "api": API_VERSION,
            "qid": format_qid(e),
            "findings": [
                {
                    "target": format_qid(f.target),
                    "witnesses": [[format_qid(x) for x in w] for w in f.witnesses],
                }
                for f in findings
            ],
        }

    @app.get("/api/entity/{qid}/similarity")
    def similarity(qid: str):
        try:
            e = parse_qid(qid)
        except ValueError as exc:
            return _error(400, "MalformedId", str(exc))
        snap = holder.get()
        if snap is None:
            return _error(503, "SnapshotNotLoaded", "no analysis snapshot is loaded")
        if e not in snap.graph:
            return _error(404, "UnknownEntity", f"{format_qid(e)} is not in the snapshot")
        g = snap.graph
        own = _text_or_none(snap.texts.get(e))
        if own is None:
            return _error(422, "EmptyText", f"{format_qid(e)} has no embeddable text")
        parents = sorted(
            ({int(p) for p in g.parents(e, P31)} | {int(p) for p in g.parents(e, P279)}) - {e}
        )
        labeled = [(e, own)]
        labeled += [
            (p, t)
            for p in parents
            if (t := _text_or_none(snap.texts.get(p))) is not None
        ]
        if len(labeled) < 2:
            return _error(422, "EmptyText", "no parent has embeddable text")
        provider, cache = _provider_and_cache()
        try:
            vectors = embed_many(provider, [t for _, t in labeled], cache=cache)
        except ProviderUnavailableError as exc:
            return _error(502, "ProviderUnavailable", str(exc))
        rows = np.stack(vectors).astype(np.float64)
        matrix = rows @ rows.T
        matrix = (matrix + matrix.T) / 2.0
        return {
            "api": API_VERSION,
            "qid": format_qid(e),
            "provider": provider.identity,
            "labels": [format_qid(x) for x, _ in labeled],
            "matrix": [[float(v) for v in row] for row in matrix],
        }

    @app.get("/api/roots/top")
    def roots_top(n: int = 20):
        if n < 1:
            return _error(400, "BadCount", "n must be at least 1")
        snap = holder.get()
        if snap is None:
            return _error(503, "SnapshotNotLoaded", "no analysis snapshot is loaded")
        if snap.roots is None:
            return _error(503, "DriftArtifactsMissing", "run the drift and aggregate stages first")
        items = [
            {
                "root": a.root if isinstance(a.root, str) else format_qid(a.root),
                "cnt": a.cnt,
                "avg_drift": a.avg_drift,
                "p90": a.p90,
                "high_ratio": a.high_ratio,
            }
            for a in snap.roots[:n]
        ]
        return {"api": API_VERSION, "roots": items}

    @app.get("/api/heatmap")
    def heatmap_view():
        snap = holder.get()
        if snap is None:
            return _error(503, "SnapshotNotLoaded", "no analysis snapshot is loaded")
        if snap.heat is None:
            return _error(503, "DriftArtifactsMissing", "run the drift and heatmap stages first")
        table = snap.heat
        return {
            "api": API_VERSION,
            "groups": list(table.groups),
            "bins": [[lo, None if hi == float("inf") else hi] for lo, hi in table.bins],
            "counts": [list(row) for row in table.counts],
        }

    @app.post("/api/scan")
    def scan(payload: dict):
        has_entities = isinstance(payload.get("entities"), list)
        has_component = "component" in payload
        if has_entities == has_component:
            return _error(400, "InvalidSpec", "provide either an entities list or a component id")
        stages = payload.get("stages")
        if not isinstance(stages, list) or not stages or not set(stages) <= set(SCAN_STAGES):
            return _error(400, "InvalidSpec", f"stages must be a non-empty subset of {list(SCAN_STAGES)}")
        if holder.get() is None:
            return _error(503, "SnapshotNotLoaded", "no analysis snapshot is loaded")
        spec: dict = {"stages": stages}
        if has_entities:
            try:
                spec["entities"] = [
                    format_qid(parse_qid(q) if isinstance(q, str) else int(q))
                    for q in payload["entities"]
                ]
            except (ValueError, TypeError) as exc:
                return _error(400, "InvalidSpec", f"bad entity id: {exc}")
        else:
            if not isinstance(payload["component"], int):
                return _error(400, "InvalidSpec", "component must be an integer id")
            spec["component"] = payload["component"]
        job = registry.submit(spec)
        if job is None:
            return _error(429, "QueueFull", f"at most {registry.max_jobs} jobs may be active")
        return JSONResponse({"api": API_VERSION, "job": job.public()}, status_code=202)

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        job = registry.get(job_id)
        if job is None:
            return _error(404, "UnknownJob", f"no job {job_id!r}")
        return {"api": API_VERSION, "job": job.public()}

    @app.get("/api/i18n/{lang}")
    def i18n_catalog(lang: str):
        locale = resolve_locale(lang)
        return {"api": API_VERSION, "locale": locale, "messages": load_catalog(locale)}

    console = console_dir or os.environ.get("TAXOLINT_CONSOLE_DIR")
    if console and (Path(console) / "index.html").is_file():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=console, html=True), name="console")

    return app
