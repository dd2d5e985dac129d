"""Information-feed clients: weather, news, covid, traffic, calendar,
stocks, email summary, phone notifications.

Every provider runs in one of two modes. Mock mode reads a JSON fixture and
is bit-deterministic; it has no access to the HTTP transport at all, so a
mock deployment can never touch the network. Live mode performs one GET
against the configured endpoint (expected to answer with the provider's
payload schema) and falls back to the last cached snapshot on any failure,
marking it stale once older than the ttl.

Payloads are schema-checked on every fetch; a bad payload counts as a fetch
failure rather than poisoning the cache.
"""

from __future__ import annotations

import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

from .session import Feature, Role, feature_allowed


class ProviderError(Exception):
    pass


class ProviderUnavailable(ProviderError):
    """Fetch failed and no cached snapshot exists."""


class SchemaViolation(ProviderError):
    pass


class UnknownProvider(ProviderError):
    pass


@dataclass(frozen=True)
class ProviderSnapshot:
    provider_id: str
    payload: dict
    fetched_at: float
    ttl: float
    stale: bool

    def to_dict(self):
        return {
            "provider_id": self.provider_id,
            "payload": self.payload,
            "fetched_at": self.fetched_at,
            "ttl": self.ttl,
            "stale": self.stale,
        }


@dataclass
class ProviderConfig:
    mode: str = "mock"  # "mock" | "live"
    endpoint: str | None = None
    credentials_env: str | None = None
    ttl: float | None = None  # None picks the provider default
    fixture_path: str | None = None  # None picks the bundled fixture


PROVIDER_FEATURES = {
    "weather": Feature.WEATHER,
    "news": Feature.NEWS_UPDATE,
    "covid": Feature.COVID_UPDATE,
    "traffic": Feature.TRAFFIC_UPDATE,
    "calendar": Feature.CALENDAR,
    "stock": Feature.STOCK_MARKET,
    "email": Feature.GMAIL,
    "phone": Feature.PHONE_NOTIFICATION,
}

DEFAULT_TTLS = {
    "weather": 300.0, "news": 300.0, "covid": 300.0, "stock": 300.0,
    "traffic": 60.0, "calendar": 300.0, "email": 300.0, "phone": 300.0,
}

MOCK_ONLY = {"phone"}  # no live bridge exists for phone notifications

_NUM = (int, float)
SCHEMAS = {
    "weather": {"temp_c": _NUM, "condition": str, "humidity": _NUM},
    "news": {"headlines": list},
    "covid": {"region": str, "confirmed": int, "recovered": int, "deaths": int},
    "traffic": {"route": str, "delay_minutes": _NUM, "status": str},
    "calendar": {"events": list, "holidays": list},
    "stock": {"quotes": list},
    "email": {"unread": int, "subjects": list},
    "phone": {"notifications": list},
}
_LIST_ITEM_KEYS = {
    "news": ("headlines", {"title", "source", "url"}),
    "stock": ("quotes", {"symbol", "price", "change"}),
}


def validate_payload(provider_id: str, payload) -> dict:
    schema = SCHEMAS.get(provider_id)
    if schema is None:
        raise UnknownProvider(provider_id)
    if not isinstance(payload, dict):
        raise SchemaViolation(f"{provider_id}: payload must be an object")
    for key, types in schema.items():
        if key not in payload:
            raise SchemaViolation(f"{provider_id}: missing key {key!r}")
        if not isinstance(payload[key], types):
            raise SchemaViolation(f"{provider_id}: {key!r} has wrong type")
    if provider_id in _LIST_ITEM_KEYS:
        key, wanted = _LIST_ITEM_KEYS[provider_id]
        for item in payload[key]:
            if not isinstance(item, dict) or not wanted <= set(item):
                raise SchemaViolation(f"{provider_id}: bad {key} entry {item!r}")
    return payload


def _bundled_fixture_text(provider_id):
    ref = resources.files("mirrord.data").joinpath(f"fixtures/{provider_id}.json")
    return ref.read_text(encoding="utf-8")


def _default_http_get(url, headers, timeout=5.0):
    import requests

    resp = requests.get(url, headers=headers, timeout=timeout)
    return resp.status_code, resp.content


class Registry:
    """Ordered provider set with a last-writer-wins snapshot cache."""

    def __init__(self, configs: dict, http_get=None):
        for pid, cfg in configs.items():
            if pid not in PROVIDER_FEATURES:
                raise UnknownProvider(pid)
            if cfg.mode not in ("mock", "live"):
                raise ValueError(f"{pid}: bad mode {cfg.mode!r}")
            if cfg.mode == "live" and pid in MOCK_ONLY:
                raise ValueError(f"{pid}: provider is mock-only")
            if cfg.mode == "live" and not cfg.endpoint:
                raise ValueError(f"{pid}: live mode requires an endpoint")
        self.configs = dict(configs)
        self._http_get = http_get or _default_http_get
        self._cache = {}
        self._lock = threading.Lock()

    def provider_ids(self):
        return list(self.configs)

    def feature_of(self, provider_id) -> Feature:
        return PROVIDER_FEATURES[provider_id]

    def _fetch_payload(self, provider_id, cfg):
        if cfg.mode == "mock":
            # the mock branch never sees the HTTP transport
            if cfg.fixture_path:
                with open(cfg.fixture_path, "r", encoding="utf-8") as fh:
                    text = fh.read()
            else:
                text = _bundled_fixture_text(provider_id)
            return validate_payload(provider_id, json.loads(text))
        headers = {}
        if cfg.credentials_env:
            secret = os.environ.get(cfg.credentials_env)
            if secret:
                headers["Authorization"] = f"Bearer {secret}"
        status, body = self._http_get(cfg.endpoint, headers)
        if status != 200:
            raise ProviderUnavailable(f"{provider_id}: HTTP {status}")
        return validate_payload(provider_id, json.loads(body))

    def fetch(self, provider_id: str, now: float) -> ProviderSnapshot:
        """One fetch attempt; on failure, the freshest cached snapshot with
        its staleness recomputed, or ProviderUnavailable."""
        cfg = self.configs.get(provider_id)
        if cfg is None:
            raise UnknownProvider(provider_id)
        ttl = cfg.ttl if cfg.ttl is not None else DEFAULT_TTLS[provider_id]
        try:
            payload = self._fetch_payload(provider_id, cfg)
        except (ProviderError, OSError, ValueError) as exc:
            with self._lock:
                cached = self._cache.get(provider_id)
            if cached is None:
                raise ProviderUnavailable(f"{provider_id}: {exc}") from None
            stale = (now - cached.fetched_at) > cached.ttl
            return ProviderSnapshot(provider_id, cached.payload,
                                    cached.fetched_at, cached.ttl, stale)
        snap = ProviderSnapshot(provider_id, payload, now, ttl, stale=False)
        with self._lock:
            self._cache[provider_id] = snap
        return snap

    # alias used by command execution
    snapshot = fetch

    def cached(self, provider_id, now):
        with self._lock:
            snap = self._cache.get(provider_id)
        if snap is None:
            return None
        stale = (now - snap.fetched_at) > snap.ttl
        return ProviderSnapshot(provider_id, snap.payload, snap.fetched_at,
                                snap.ttl, stale)

    def refresh_all(self, role: Role, now: float):
        """Fetch every provider the role may see; failures are isolated and
        simply drop out of the result. Order follows declaration order."""
        wanted = [pid for pid in self.configs
                  if feature_allowed(role, PROVIDER_FEATURES[pid])]
        results = {}
        if not wanted:
            return []
        with ThreadPoolExecutor(max_workers=min(8, len(wanted))) as pool:
            futures = {pid: pool.submit(self.fetch, pid, now) for pid in wanted}
            for pid, fut in futures.items():
                try:
                    results[pid] = fut.result()
                except ProviderError:
                    pass
        return [results[pid] for pid in wanted if pid in results]


def default_registry(http_get=None, overrides=None) -> Registry:
    """All eight providers in mock mode, canonical order."""
    configs = {pid: ProviderConfig() for pid in PROVIDER_FEATURES}
    if overrides:
        configs.update(overrides)
    return Registry(configs, http_get=http_get)
