from __future__ import annotations

import json
import os
import time
from pathlib import Path

import pytest

from taxolint.errors import NetworkError, RateLimitedError, UnknownQidError
from taxolint.live import OFFLINE_ENV, LiveClient, fetch_entity_live

from helpers import P31, P279

CASSETTES = Path(__file__).parent / "cassettes"


class FakeResponse:
    def __init__(self, status_code: int, body):
        self.status_code = status_code
        self._body = body

    def json(self):
        if self._body is None:
            raise ValueError("no body")
        return self._body


class FakeSession:
    """Serves recorded responses; records every request it sees."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def get(self, url, params=None, headers=None, timeout=None):
        self.calls.append({"url": url, "params": params, "headers": headers})
        if not self.responses:
            raise AssertionError("unexpected extra request")
        return self.responses.pop(0)


def _cassette(name: str):
    return json.loads((CASSETTES / name).read_text(encoding="utf-8"))


def test_fetch_root_entity_from_cassette(tmp_path):
    session = FakeSession([FakeResponse(200, _cassette("Q35120.json"))])
    client = LiveClient("https://example.test/w/api.php", tmp_path, min_interval=0, session=session)
    edges, text = client.fetch(35120)
    assert edges == []
    assert text.label == "entity"
    assert text.language == "en"

    call = session.calls[0]
    assert call["url"] == "https://example.test/w/api.php"
    assert call["params"] == {
        "action": "wbgetentities",
        "ids": "Q35120",
        "props": "claims|labels|descriptions",
        "format": "json",
    }


def test_fetch_entity_with_claims(tmp_path):
    session = FakeSession([FakeResponse(200, _cassette("Q5376341.json"))])
    client = LiveClient("https://example.test/w/api.php", tmp_path, min_interval=0, session=session)
    edges, text = client.fetch(5376341)
    assert [(e.child, e.kind, e.parent) for e in edges] == [(5376341, P31, 8047435)]
    assert text.label == "Endoglycosylceramidase"


def test_missing_entity_raises(tmp_path):
    session = FakeSession([FakeResponse(200, _cassette("missing.json"))])
    client = LiveClient("https://example.test/w/api.php", tmp_path, min_interval=0, session=session)
    with pytest.raises(UnknownQidError):
        client.fetch(999999999999)


def test_no_such_entity_error_code(tmp_path):
    body = {"error": {"code": "no-such-entity", "info": "..."}}
    session = FakeSession([FakeResponse(200, body)])
    client = LiveClient("https://example.test/w/api.php", tmp_path, min_interval=0, session=session)
    with pytest.raises(UnknownQidError):
        client.fetch(424242)


def test_second_fetch_served_from_cache(tmp_path):
    session = FakeSession([FakeResponse(200, _cassette("Q35120.json"))])
    client = LiveClient("https://example.test/w/api.php", tmp_path, min_interval=0, session=session)
    client.fetch(35120)
    edges, text = client.fetch(35120)  # would raise in FakeSession if it hit the network
    assert text.label == "entity"
    assert len(session.calls) == 1
    assert list(tmp_path.glob("Q35120.*.json"))


def test_http_error_raises_network_error(tmp_path):
    session = FakeSession([FakeResponse(500, None)])
    client = LiveClient("https://example.test/w/api.php", tmp_path, min_interval=0, session=session)
    with pytest.raises(NetworkError):
        client.fetch(1)


def test_rate_limited_status(tmp_path):
    session = FakeSession([FakeResponse(429, None)])
    client = LiveClient("https://example.test/w/api.php", tmp_path, min_interval=0, session=session)
    with pytest.raises(RateLimitedError):
        client.fetch(1)


def test_min_interval_enforced(tmp_path):
    session = FakeSession(
        [FakeResponse(200, _cassette("Q35120.json")), FakeResponse(200, _cassette("Q5376341.json"))]
    )
    client = LiveClient("https://example.test/w/api.php", None, min_interval=0.05, session=session)
    start = time.monotonic()
    client.fetch(35120)
    client.fetch(5376341)
    assert time.monotonic() - start >= 0.05


def test_offline_env_blocks_network(tmp_path, monkeypatch):
    monkeypatch.setenv(OFFLINE_ENV, "1")
    session = FakeSession([])
    client = LiveClient("https://example.test/w/api.php", tmp_path, min_interval=0, session=session)
    with pytest.raises(NetworkError):
        client.fetch(35120)
    assert session.calls == []


def test_offline_env_still_serves_cache(tmp_path, monkeypatch):
    session = FakeSession([FakeResponse(200, _cassette("Q35120.json"))])
    client = LiveClient("https://example.test/w/api.php", tmp_path, min_interval=0, session=session)
    client.fetch(35120)
    monkeypatch.setenv(OFFLINE_ENV, "1")
    _, text = client.fetch(35120)
    assert text.label == "entity"


@pytest.mark.networked
@pytest.mark.skipif(os.environ.get("TAXOLINT_NET") != "1", reason="set TAXOLINT_NET=1 to hit the live API")
def test_live_root_entity(tmp_path):
    edges, text = fetch_entity_live(35120, cache_dir=tmp_path)
    assert text.label == "entity"
    assert all(e.kind is not P279 for e in edges)
