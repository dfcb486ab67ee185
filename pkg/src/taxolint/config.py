"""Pipeline configuration from defaults, a flat config file, and flags.

Precedence: explicit flag values beat the config file, which beats
built-in defaults.  The file is a flat ``key = value`` document whose
keys are exactly the PipelineConfig field names.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .core import MetaclassPolicy, parse_qid
from .embedding import (
    DEFAULT_DIMENSION,
    DEFAULT_REMOTE_MODEL,
    EmbeddingProvider,
    OfflineProvider,
    RemoteProvider,
)
from .risk import DEFAULT_ROOT, RiskWeights


@dataclass(frozen=True)
class PipelineConfig:
    triples: str | None = None
    dump: str | None = None
    texts: str | None = None
    policy_file: str | None = None
    w_connection: float = 0.25
    w_coherence: float = 0.25
    w_depth_variance: float = 0.25
    w_alignment: float = 0.25
    drift_threshold: float = 0.60
    d_max: int = 10
    count_divisor: float = 5.0
    variance_divisor: float = 9.0
    root: int = DEFAULT_ROOT
    provider: str = "offline"
    endpoint: str | None = None
    model: str = DEFAULT_REMOTE_MODEL
    dimension: int = DEFAULT_DIMENSION
    locale: str = "en"
    out: str = "."
    jobs: int = 0  # 0 means all available cores
    max_paths: int = 8
    host: str = "127.0.0.1"
    port: int = 8000
    scan_jobs: int = 2

    def weights(self) -> RiskWeights:
        return RiskWeights(
            self.w_connection, self.w_coherence, self.w_depth_variance, self.w_alignment
        )

    def policy(self) -> MetaclassPolicy:
        if self.policy_file is None:
            return MetaclassPolicy()
        return load_policy(self.policy_file)

    def make_provider(self) -> EmbeddingProvider:
        if self.provider == "offline":
            return OfflineProvider(self.dimension)
        if self.provider == "remote":
            if not self.endpoint:
                raise ValueError("remote provider needs an endpoint")
            return RemoteProvider(self.endpoint, model=self.model, dimension=self.dimension)
        raise ValueError(f"unknown provider {self.provider!r}")

    def effective_jobs(self) -> int:
        return self.jobs if self.jobs > 0 else (os.cpu_count() or 1)


_FIELDS = {f.name: f for f in fields(PipelineConfig)}

_INT_FIELDS = {"d_max", "dimension", "jobs", "max_paths", "port", "scan_jobs"}
_FLOAT_FIELDS = {
    "w_connection",
    "w_coherence",
    "w_depth_variance",
    "w_alignment",
    "drift_threshold",
    "count_divisor",
    "variance_divisor",
}


def _entity_id(value) -> int:
    if isinstance(value, int):
        return value
    value = str(value).strip()
    return parse_qid(value) if value[:1] in ("Q", "q") else int(value)


def _coerce(name: str, value: str):
    if name == "root":
        return _entity_id(value)
    if name in _INT_FIELDS:
        return int(value)
    if name in _FLOAT_FIELDS:
        return float(value)
    return value


def load_config_file(path: str | Path) -> dict[str, str]:
    """Flat key=value lines; # starts a comment; unknown keys fail."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {line!r}")
            if key not in _FIELDS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value.strip()
    return values


def resolve_config(
    file_values: dict[str, str] | None = None, overrides: dict | None = None
) -> PipelineConfig:
    """Merge file values and flag overrides; overrides of None are unset."""
    merged = {}
    for name, value in (file_values or {}).items():
        if name not in _FIELDS:
            raise ValueError(f"unknown config key {name!r}")
        merged[name] = _coerce(name, value)
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        if name not in _FIELDS:
            raise ValueError(f"unknown config key {name!r}")
        merged[name] = _coerce(name, value) if isinstance(value, str) else value
    return PipelineConfig(**merged)


def load_policy(path: str | Path) -> MetaclassPolicy:
    """JSON policy file with abstract/technical id lists (ints or QIDs)."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: policy file must hold an object")
    known = {"abstract_class_ids", "technical_node_ids"}
    extra = set(data) - known
    if extra:
        raise ValueError(f"{path}: unknown policy keys {sorted(extra)}")
    kwargs = {}
    for key in known:
        if key in data:
            kwargs[key] = frozenset(_entity_id(v) for v in data[key])
    return MetaclassPolicy(**kwargs)
