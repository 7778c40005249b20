"""Chat-completion providers: a live HTTP client and a deterministic
fixture-replaying mock, interchangeable behind complete(messages).
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass

import requests

from .errors import AuthenticationError, FixtureExhaustedError, ProviderError, SchemaError

DEFAULT_API_KEY_ENV = "PACK_ORDER_API_KEY"
TRANSPORT_RETRIES = 2
MAX_IN_FLIGHT = 4


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    timeout: float = 60.0
    api_key_env: str = DEFAULT_API_KEY_ENV
    fixtures_path: str = ""

    def __post_init__(self):
        if self.kind not in ("live", "mock"):
            raise SchemaError(f"provider kind must be live or mock, got {self.kind!r}")
        if self.kind == "live" and not self.endpoint:
            raise SchemaError("live provider requires an endpoint URL")
        if self.kind == "mock" and not self.fixtures_path:
            raise SchemaError("mock provider requires a fixtures path")

    def describe(self) -> dict:
        """Provenance view: everything but the secret."""
        return {
            "kind": self.kind,
            "endpoint": self.endpoint,
            "model": self.model,
            "temperature": self.temperature,
            "api_key_env": self.api_key_env if self.kind == "live" else "",
        }


@dataclass(frozen=True)
class ChatExchange:
    messages: tuple[dict, ...]
    response: str
    latency: float


def message_fingerprint(messages) -> str:
    """Stable hash of rendered messages; image payloads hash by content."""
    canonical = []
    for msg in messages:
        entry = {"role": msg.get("role", ""), "content": msg.get("content", "")}
        image = msg.get("image")
        if image:
            data = image["data"]
            if isinstance(data, str):
                data = data.encode()
            entry["image_sha256"] = hashlib.sha256(data).hexdigest()
        canonical.append(entry)
    blob = json.dumps(canonical, sort_keys=True, ensure_ascii=True)
    return hashlib.sha256(blob.encode()).hexdigest()


class MockProvider:
    """Replays fixture responses deterministically and fully offline.

    Each fixture record is {response, fingerprint (optional)}. A request
    first consumes an unused record with a matching fingerprint, then falls
    back to the next unused record in file order.
    """

    def __init__(self, fixtures: list[dict]):
        for i, rec in enumerate(fixtures):
            if "response" not in rec:
                raise SchemaError(f"fixture record {i} is missing a response")
        self._fixtures = [dict(rec) for rec in fixtures]
        self._used = [False] * len(fixtures)
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path) -> "MockProvider":
        with open(path, encoding="utf-8") as f:
            try:
                doc = json.load(f)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}: {exc}") from exc
        if isinstance(doc, dict):
            doc = doc.get("exchanges", [])
        if not isinstance(doc, list):
            raise SchemaError(f"{path}: fixture file must be a list of records")
        return cls(doc)

    def complete(self, messages) -> ChatExchange:
        fp = message_fingerprint(messages)
        with self._lock:
            pick = None
            for i, rec in enumerate(self._fixtures):
                if not self._used[i] and rec.get("fingerprint") == fp:
                    pick = i
                    break
            if pick is None:
                for i in range(len(self._fixtures)):
                    if not self._used[i]:
                        pick = i
                        break
            if pick is None:
                raise FixtureExhaustedError("mock provider has no fixture responses left")
            self._used[pick] = True
            response = self._fixtures[pick]["response"]
        return ChatExchange(tuple(messages), response, 0.0)


class LiveProvider:
    """One HTTP round trip per call to a chat-completions-compatible endpoint."""

    def __init__(self, config: ProviderConfig, session: requests.Session | None = None):
        self.config = config
        self._session = session or requests.Session()
        self._limiter = threading.Semaphore(MAX_IN_FLIGHT)
        key = os.environ.get(config.api_key_env, "")
        if not key:
            raise AuthenticationError(
                f"no API key found in environment variable {config.api_key_env}"
            )
        self._key = key

    @staticmethod
    def _wire_messages(messages) -> list[dict]:
        wire = []
        for msg in messages:
            image = msg.get("image")
            if image:
                data = image["data"]
                if isinstance(data, str):
                    data = data.encode()
                b64 = base64.b64encode(data).decode()
                wire.append({
                    "role": msg["role"],
                    "content": [
                        {"type": "text", "text": msg["content"]},
                        {
                            "type": "image_url",
                            "image_url": {"url": f"data:{image['media_type']};base64,{b64}"},
                        },
                    ],
                })
            else:
                wire.append({"role": msg["role"], "content": msg["content"]})
        return wire

    def complete(self, messages) -> ChatExchange:
        payload = {
            "model": self.config.model,
            "messages": self._wire_messages(messages),
            "temperature": self.config.temperature,
        }
        headers = {"Authorization": f"Bearer {self._key}"}
        start = time.monotonic()
        last_exc = None
        with self._limiter:
            for attempt in range(TRANSPORT_RETRIES + 1):
                try:
                    resp = self._session.post(
                        self.config.endpoint,
                        json=payload,
                        headers=headers,
                        timeout=self.config.timeout,
                    )
                except requests.RequestException as exc:
                    last_exc = exc
                    if attempt < TRANSPORT_RETRIES:
                        time.sleep(2.0 ** attempt)
                    continue
                if 400 <= resp.status_code < 500:
                    raise AuthenticationError(
                        f"provider rejected the request with status {resp.status_code}"
                    )
                if resp.status_code >= 500:
                    last_exc = ProviderError(f"provider returned status {resp.status_code}")
                    if attempt < TRANSPORT_RETRIES:
                        time.sleep(2.0 ** attempt)
                    continue
                try:
                    text = resp.json()["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError) as exc:
                    raise ProviderError(f"malformed completion response: {exc}") from exc
                if text is None:
                    raise ProviderError("provider returned a null response text")
                return ChatExchange(tuple(messages), text, time.monotonic() - start)
        raise ProviderError(
            f"transport failed after {TRANSPORT_RETRIES + 1} attempts: {last_exc}"
        )


def make_provider(config: ProviderConfig):
    if config.kind == "mock":
        return MockProvider.from_file(config.fixtures_path)
    return LiveProvider(config)
