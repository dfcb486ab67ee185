"""On-demand single-entity fetch from a wbgetentities-speaking API.

Responses are cached on disk keyed by qid and fetch date, so repeated
lookups within a day never touch the network.  Setting the environment
variable ``TAXOLINT_OFFLINE=1`` disables all network use.
"""

from __future__ import annotations

import datetime
import json
import os
import time
from pathlib import Path

import requests

from .core import EntityId, EntityText, format_qid
from .errors import NetworkError, RateLimitedError, UnknownQidError
from .ingest import TripleRecord, extract_entity
from .ioutil import atomic_write

DEFAULT_ENDPOINT = "https://www.wikidata.org/w/api.php"
OFFLINE_ENV = "TAXOLINT_OFFLINE"
_USER_AGENT = "taxolint/0.1 (taxonomy diagnostics)"


def _offline() -> bool:
    return os.environ.get(OFFLINE_ENV, "") == "1"


class LiveClient:
    """Rate-limited, disk-cached wbgetentities client."""

    def __init__(
        self,
        endpoint: str = DEFAULT_ENDPOINT,
        cache_dir: str | Path | None = None,
        language: str = "en",
        min_interval: float = 1.0,
        session=None,
    ):
        self.endpoint = endpoint
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.language = language
        self.min_interval = min_interval
        self._session = session
        self._last_request = -float("inf")

    def _cache_path(self, qid: EntityId) -> Path | None:
        if self.cache_dir is None:
            return None
        day = datetime.date.today().isoformat()
        return self.cache_dir / f"{format_qid(qid)}.{day}.json"

    def _request(self, qid: EntityId) -> dict:
        if _offline():
            raise NetworkError(f"{OFFLINE_ENV}=1: network use disabled")
        wait = self.min_interval - (time.monotonic() - self._last_request)
        if wait > 0:
            time.sleep(wait)
        session = self._session or requests
        try:
            resp = session.get(
                self.endpoint,
                params={
                    "action": "wbgetentities",
                    "ids": format_qid(qid),
                    "props": "claims|labels|descriptions",
                    "format": "json",
                },
                headers={"User-Agent": _USER_AGENT},
                timeout=30,
            )
        except requests.RequestException as exc:
            raise NetworkError(str(exc)) from exc
        finally:
            self._last_request = time.monotonic()
        if resp.status_code == 429:
            raise RateLimitedError(f"server throttled {format_qid(qid)}")
        if resp.status_code != 200:
            raise NetworkError(f"HTTP {resp.status_code} from {self.endpoint}")
        try:
            return resp.json()
        except ValueError as exc:
            raise NetworkError(f"non-JSON response: {exc}") from exc

    def fetch(self, qid: EntityId) -> tuple[list[TripleRecord], EntityText]:
        """Fetch one entity's edges and texts, via today's cache if present."""
        cache = self._cache_path(qid)
        if cache is not None and cache.exists():
            body = json.loads(cache.read_text(encoding="utf-8"))
        else:
            body = self._request(qid)
            if cache is not None:
                with atomic_write(cache) as fh:
                    json.dump(body, fh)

        error = body.get("error")
        if error:
            if error.get("code") == "no-such-entity":
                raise UnknownQidError(qid)
            raise NetworkError(f"API error: {error.get('code', 'unknown')}")
        entity = body.get("entities", {}).get(format_qid(qid))
        if entity is None or "missing" in entity:
            raise UnknownQidError(qid)
        return extract_entity(entity, self.language)


def fetch_entity_live(
    qid: EntityId,
    endpoint: str = DEFAULT_ENDPOINT,
    cache_dir: str | Path | None = None,
    language: str = "en",
) -> tuple[list[TripleRecord], EntityText]:
    return LiveClient(endpoint, cache_dir, language).fetch(qid)
