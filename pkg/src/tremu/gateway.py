"""Chat-completion access for every model role, with record/replay fixtures.

``live`` talks to an OpenAI-compatible ``/chat/completions`` endpoint,
``record`` does the same and stores each response as a fixture file, and
``replay`` answers only from stored fixtures.  Fixture keys are content
digests of the request, so a replayed run is bit-for-bit deterministic.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from tremu.errors import AuthError, ConfigError, GatewayError, MissingFixture, TransportError

log = logging.getLogger(__name__)

ROLE_TAGS = ("mem", "retrieval", "code", "select", "extract", "link", "create")
BACKENDS = ("live", "record", "replay")
DEFAULT_MODEL = "gpt-4o-2024-05-13"
DEFAULT_BASE_URL = "https://api.openai.com/v1"


@dataclass(frozen=True)
class ChatRequest:
    role_tag: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        if self.role_tag not in ROLE_TAGS:
            raise ValueError(f"unknown role tag {self.role_tag!r}")
        msgs = tuple((str(s), str(t)) for s, t in self.messages)
        if not msgs:
            raise ValueError("a chat request needs at least one message")
        object.__setattr__(self, "messages", msgs)

    @classmethod
    def build(cls, role_tag: str, system: str, user: str, **decoding) -> "ChatRequest":
        return cls(role_tag, (("system", system), ("user", user)), **decoding)

    def extended(self, *messages: tuple[str, str]) -> "ChatRequest":
        return ChatRequest(self.role_tag, self.messages + tuple(messages), self.temperature, self.max_tokens)

    def to_dict(self) -> dict:
        return {
            "role_tag": self.role_tag,
            "messages": [{"speaker": s, "text": t} for s, t in self.messages],
            "decoding": {"temperature": float(self.temperature), "max_tokens": int(self.max_tokens)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChatRequest":
        msgs = tuple((m["speaker"], m["text"]) for m in d["messages"])
        dec = d.get("decoding", {})
        return cls(d["role_tag"], msgs, float(dec.get("temperature", 0.0)), int(dec.get("max_tokens", 1024)))

    @property
    def key(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class Fixture:
    key: str
    request: dict
    response: str
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"key": self.key, "request": self.request, "response": self.response, "meta": self.meta}


class FixtureStore:
    """A directory holding one JSON file per request key."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    def path_for(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> Fixture | None:
        p = self.path_for(key)
        if not p.exists():
            return None
        d = json.loads(p.read_text(encoding="utf-8"))
        return Fixture(d["key"], d["request"], d["response"], d.get("meta", {}))

    def put(self, fixture: Fixture) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        target = self.path_for(fixture.key)
        payload = json.dumps(fixture.to_dict(), indent=2, ensure_ascii=False, sort_keys=True) + "\n"
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return target

    def __iter__(self) -> Iterable[Fixture]:
        for p in sorted(self.root.glob("*.json")):
            d = json.loads(p.read_text(encoding="utf-8"))
            yield Fixture(d["key"], d["request"], d["response"], d.get("meta", {}))


class TokenBucket:
    """Blocking rate limiter, ``rate`` requests per minute."""

    def __init__(self, rate_per_minute: float, clock=time.monotonic, sleep=time.sleep):
        if rate_per_minute <= 0:
            raise ValueError("rate must be positive")
        self.capacity = max(1.0, rate_per_minute / 60.0)
        self.fill_per_sec = rate_per_minute / 60.0
        self.tokens = self.capacity
        self.clock = clock
        self.sleep = sleep
        self.updated = clock()
        self.lock = threading.Lock()

    def acquire(self) -> None:
        with self.lock:
            while True:
                now = self.clock()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.fill_per_sec)
                self.updated = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                self.sleep((1 - self.tokens) / self.fill_per_sec)


class _Retryable(Exception):
    pass


class HttpChatClient:
    """Minimal OpenAI-compatible chat-completions client."""

    def __init__(self, base_url: str, api_key: str, models: dict[str, str] | None = None,
                 default_model: str = DEFAULT_MODEL, retries: int = 3, backoff: float = 1.0,
                 timeout: float = 120.0, sleep=time.sleep, http_client=None):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.models = dict(models or {})
        self.default_model = default_model
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self.sleep = sleep
        self._http = http_client

    @classmethod
    def from_env(cls, environ=None, **kwargs) -> "HttpChatClient":
        env = os.environ if environ is None else environ
        key = env.get("TREMU_API_KEY") or env.get("OPENAI_API_KEY")
        if not key:
            raise AuthError("no API key: set TREMU_API_KEY or OPENAI_API_KEY")
        base = env.get("TREMU_API_BASE") or env.get("OPENAI_BASE_URL") or DEFAULT_BASE_URL
        default = env.get("TREMU_MODEL", DEFAULT_MODEL)
        models = {r: env[f"TREMU_MODEL_{r.upper()}"] for r in ROLE_TAGS if f"TREMU_MODEL_{r.upper()}" in env}
        return cls(base, key, models, default, **kwargs)

    def model_for(self, role_tag: str) -> str:
        return self.models.get(role_tag, self.default_model)

    def _client(self):
        if self._http is None:
            import httpx

            self._http = httpx.Client(timeout=self.timeout)
        return self._http

    def _once(self, req: ChatRequest) -> str:
        import httpx

        body = {
            "model": self.model_for(req.role_tag),
            "messages": [{"role": s, "content": t} for s, t in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        try:
            resp = self._client().post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
            )
        except httpx.TransportError as exc:
            raise _Retryable(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"endpoint rejected credentials ({resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise _Retryable(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError) as exc:
            raise TransportError(f"unexpected response body: {exc}") from exc

    def __call__(self, req: ChatRequest) -> str:
        delay = self.backoff
        for attempt in range(self.retries + 1):
            try:
                return self._once(req)
            except _Retryable as exc:
                if attempt == self.retries:
                    raise TransportError(f"{req.role_tag}: giving up after {attempt + 1} tries: {exc}") from None
                log.warning("transient failure (%s); retrying in %.1fs", exc, delay)
                self.sleep(delay)
                delay *= 2
        raise AssertionError("unreachable")


class Gateway:
    """Uniform ``complete(request)`` over the three backends.

    ``live`` may be any callable taking a :class:`ChatRequest` and returning
    the response text; by default an :class:`HttpChatClient` is built from
    the environment on first use.
    """

    def __init__(self, backend: str = "replay", store: FixtureStore | str | os.PathLike | None = None,
                 live: Callable[[ChatRequest], str] | None = None, rate_limit: float | None = None,
                 clock: Callable[[], str] | None = None):
        if backend not in BACKENDS:
            raise ConfigError(f"unknown backend {backend!r}; choose from {', '.join(BACKENDS)}")
        if store is not None and not isinstance(store, FixtureStore):
            store = FixtureStore(store)
        if backend in ("record", "replay") and store is None:
            raise ConfigError(f"the {backend} backend needs a fixture directory")
        self.backend = backend
        self.store = store
        self._live = live
        self._bucket = TokenBucket(rate_limit) if rate_limit else None
        self._clock = clock or (lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
        self._lock = threading.Lock()
        self.calls: dict[str, int] = {}

    def _live_call(self, req: ChatRequest) -> str:
        if self._live is None:
            with self._lock:
                if self._live is None:
                    self._live = HttpChatClient.from_env()
        if self._bucket is not None:
            self._bucket.acquire()
        return self._live(req)

    def complete(self, req: ChatRequest) -> str:
        with self._lock:
            self.calls[req.role_tag] = self.calls.get(req.role_tag, 0) + 1
        if self.backend == "replay":
            fx = self.store.get(req.key)
            if fx is None:
                raise MissingFixture(f"no fixture for role '{req.role_tag}' (key {req.key[:12]}) in {self.store.root}")
            return fx.response
        try:
            text = self._live_call(req)
        except GatewayError:
            raise
        except Exception as exc:  # transport callables may raise anything
            raise TransportError(f"{req.role_tag}: {exc}") from exc
        if self.backend == "record":
            name = getattr(self._live, "name", type(self._live).__name__)
            self.store.put(Fixture(req.key, req.to_dict(), text, {"backend": name, "recorded_at": self._clock()}))
        return text
