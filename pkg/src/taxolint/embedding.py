"""Text embedding providers and the persistent vector cache.

Every provider emits unit-norm float32 vectors and is deterministic
for one identity string.  The offline provider needs no model files
or network; the remote provider talks to an HTTP embedding service.
Vectors are cached on disk per provider identity, keyed by the
SHA-256 of the embedded text.
"""

from __future__ import annotations

import hashlib
import os
import re
import struct
import threading
from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np
import requests

from .core import EntityText
from .errors import EmptyTextError, ProviderUnavailableError
from .live import OFFLINE_ENV

DEFAULT_DIMENSION = 768
DEFAULT_REMOTE_MODEL = "sentence-transformers/all-mpnet-base-v2"
UNIT_NORM_TOLERANCE = 1e-6

_MAGIC = b"EMBC"
_HASH_BYTES = 32


def compose_text(label: str, description: str) -> str:
    """Join label and description into the string that gets embedded.

    Empty sides are dropped along with the separator; both sides empty
    is an error the caller must handle by skipping the entity.
    """
    label = label.strip()
    description = description.strip()
    if label and description:
        return f"{label}. {description}"
    if label or description:
        return label or description
    raise EmptyTextError("entity has neither label nor description")


def content_key(text: str) -> bytes:
    return hashlib.sha256(text.encode("utf-8")).digest()


def _as_unit_f32(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(np.asarray(vec, dtype=np.float64)))
    if norm < 1e-12:
        raise ValueError("cannot normalize a zero vector")
    out = (np.asarray(vec, dtype=np.float64) / norm).astype(np.float32)
    out.setflags(write=False)
    return out


class EmbeddingProvider(ABC):
    """Deterministic text-to-unit-vector encoder.

    ``identity`` names the provider and its model so cached vectors
    are never mixed across encoders.
    """

    dimension: int
    identity: str

    @abstractmethod
    def embed_batch(self, texts: list[str]) -> np.ndarray:
        """Encode texts into a (len(texts), dimension) float32 array."""

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]


class OfflineProvider(EmbeddingProvider):
    """Hash-seeded pseudo-random embeddings, no model download.

    Each whitespace token maps to a fixed unit vector seeded by its
    SHA-256; token vectors are summed and renormalized.  Texts sharing
    tokens therefore correlate, which is all the test suite needs.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        if dimension < 2:
            raise ValueError("dimension must be >= 2")
        self.dimension = dimension
        self.identity = f"offline:token-hash-v1:d{dimension}"
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "little")
            raw = np.random.default_rng(seed).standard_normal(self.dimension)
            vec = raw / np.linalg.norm(raw)
            self._token_cache[token] = vec
        return vec

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        out = np.empty((len(texts), self.dimension), dtype=np.float32)
        for i, text in enumerate(texts):
            tokens = text.lower().split()
            if not tokens:
                raise EmptyTextError("text has no tokens")
            total = np.zeros(self.dimension, dtype=np.float64)
            for token in tokens:
                total += self._token_vector(token)
            if np.linalg.norm(total) < 1e-12:
                total = self._token_vector(tokens[0]).copy()
            out[i] = _as_unit_f32(total)
        out.setflags(write=False)
        return out


class RemoteProvider(EmbeddingProvider):
    """Client for an HTTP embedding service."""

    def __init__(
        self,
        endpoint: str,
        model: str = DEFAULT_REMOTE_MODEL,
        dimension: int = DEFAULT_DIMENSION,
        session=None,
        timeout: float = 60.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.dimension = dimension
        self.identity = f"remote:{model}:d{dimension}"
        self._session = session or requests.Session()
        self._timeout = timeout

    def embed_batch(self, texts: list[str]) -> np.ndarray:
        if os.environ.get(OFFLINE_ENV) == "1":
            raise ProviderUnavailableError("offline mode is set; remote embedding disabled")
        try:
            response = self._session.post(
                f"{self.endpoint}/embed",
                json={"texts": list(texts)},
                timeout=self._timeout,
            )
        except requests.RequestException as exc:
            raise ProviderUnavailableError(f"embedding service unreachable: {exc}") from exc
        if response.status_code != 200:
            raise ProviderUnavailableError(
                f"embedding service returned HTTP {response.status_code}"
            )
        try:
            vectors = np.asarray(response.json()["vectors"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderUnavailableError(f"malformed embedding response: {exc}") from exc
        if vectors.shape != (len(texts), self.dimension):
            raise ProviderUnavailableError(
                f"expected {len(texts)}x{self.dimension} vectors, got {vectors.shape}"
            )
        out = np.empty((len(texts), self.dimension), dtype=np.float32)
        for i in range(len(texts)):
            out[i] = _as_unit_f32(vectors[i])
        out.setflags(write=False)
        return out


class EmbeddingCache:
    """Append-only binary vector store for one provider identity.

    Layout: magic, u32 little-endian dimension, then fixed-size
    records of 32-byte content hash plus dimension float32 values.
    A torn trailing record from an interrupted append is ignored on
    load.  Reads are lock-free after load; appends serialize.
    """

    def __init__(self, path: str | Path, dimension: int):
        self.path = Path(path)
        self.dimension = dimension
        self._lock = threading.Lock()
        self._index: dict[bytes, np.ndarray] = {}
        self._load()

    def _record_size(self) -> int:
        return _HASH_BYTES + self.dimension * 4

    def _load(self) -> None:
        if not self.path.exists():
            return
        blob = self.path.read_bytes()
        if len(blob) < 8 or blob[:4] != _MAGIC:
            raise ValueError(f"{self.path} is not an embedding cache")
        (dim,) = struct.unpack("<I", blob[4:8])
        if dim != self.dimension:
            raise ValueError(f"cache dimension {dim} != expected {self.dimension}")
        size = self._record_size()
        body = blob[8:]
        for start in range(0, len(body) - size + 1, size):
            key = body[start : start + _HASH_BYTES]
            vec = np.frombuffer(body[start + _HASH_BYTES : start + size], dtype="<f4").copy()
            vec.setflags(write=False)
            self._index[key] = vec

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, key: bytes) -> bool:
        return key in self._index

    def get(self, key: bytes) -> np.ndarray | None:
        return self._index.get(key)

    def put(self, key: bytes, vector: np.ndarray) -> None:
        if len(key) != _HASH_BYTES:
            raise ValueError("cache keys are 32-byte digests")
        vec = np.ascontiguousarray(vector, dtype="<f4")
        if vec.shape != (self.dimension,):
            raise ValueError(f"vector shape {vec.shape} != ({self.dimension},)")
        with self._lock:
            if key in self._index:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            is_new = not self.path.exists()
            with open(self.path, "ab") as fh:
                if is_new:
                    fh.write(_MAGIC + struct.pack("<I", self.dimension))
                fh.write(key + vec.tobytes())
                fh.flush()
                os.fsync(fh.fileno())
            stored = vec.copy()
            stored.setflags(write=False)
            self._index[key] = stored

    @classmethod
    def for_provider(cls, directory: str | Path, provider: EmbeddingProvider) -> "EmbeddingCache":
        safe = re.sub(r"[^A-Za-z0-9._-]+", "-", provider.identity).strip("-")
        digest = hashlib.sha256(provider.identity.encode("utf-8")).hexdigest()[:8]
        return cls(Path(directory) / f"{safe}-{digest}.embc", provider.dimension)


def embed_string(
    provider: EmbeddingProvider, text: str, cache: EmbeddingCache | None = None
) -> np.ndarray:
    key = content_key(text)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None:
            return hit
    vec = provider.embed(text)
    _check_unit(vec)
    if cache is not None:
        cache.put(key, vec)
    return vec


def embed_entity(
    provider: EmbeddingProvider, text: EntityText, cache: EmbeddingCache | None = None
) -> np.ndarray:
    """Embed one entity's composed label/description text."""
    return embed_string(provider, compose_text(text.label, text.description), cache)


def embed_many(
    provider: EmbeddingProvider, texts: list[str], cache: EmbeddingCache | None = None
) -> list[np.ndarray]:
    """Batch variant of embed_string; provider sees only cache misses."""
    results: list[np.ndarray | None] = [None] * len(texts)
    misses: list[int] = []
    for i, text in enumerate(texts):
        hit = cache.get(content_key(text)) if cache is not None else None
        if hit is not None:
            results[i] = hit
        else:
            misses.append(i)
    if misses:
        fresh = provider.embed_batch([texts[i] for i in misses])
        for row, i in enumerate(misses):
            vec = fresh[row]
            _check_unit(vec)
            if cache is not None:
                cache.put(content_key(texts[i]), vec)
            results[i] = vec
    return results  # type: ignore[return-value]


def _check_unit(vec: np.ndarray) -> None:
    norm = float(np.linalg.norm(np.asarray(vec, dtype=np.float64)))
    if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
        raise ValueError(f"provider emitted a non-unit vector (norm {norm})")
