"""Multimodal chat-completion client.

Two backends behind one `complete()` surface: a live OpenAI-compatible
HTTP backend (vLLM and friends serve this shape) and a deterministic
scripted mock for tests. At most one image part per request.
"""

from __future__ import annotations

import base64
import logging
import os
import threading
import time
from dataclasses import dataclass, field

import requests

from .corpus import ImagePayload
from .errors import AuthMissing, ProtocolError, RateLimited, Timeout

log = logging.getLogger(__name__)

DEFAULT_AUTH_ENV = "STAR_API_KEY"


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff: float = 0.5  # seconds, doubled per attempt


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"  # "live" | "mock"
    endpoint: str = ""
    model: str = ""
    auth_env: str = DEFAULT_AUTH_ENV
    max_concurrency: int = 4
    retry: RetryPolicy = field(default_factory=RetryPolicy)

    def __post_init__(self):
        if self.kind not in ("live", "mock"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "live" and (not self.endpoint or not self.model):
            raise ValueError("live backend requires endpoint and model")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[dict, ...]  # {"role": ..., "content": [parts]}
    temperature: float = 0.2
    max_tokens: int = 1024
    seed: int | None = None

    def __post_init__(self):
        if not self.messages:
            raise ValueError("at least one message required")
        n_images = sum(
            1
            for m in self.messages
            for part in m["content"]
            if isinstance(part, dict) and part.get("type") == "image"
        )
        if n_images > 1:
            raise ValueError("at most one image part per request")

    def last_user_text(self) -> str:
        for m in reversed(self.messages):
            if m["role"] == "user":
                return "\n".join(
                    part["text"]
                    for part in m["content"]
                    if isinstance(part, dict) and part.get("type") == "text"
                )
        return ""


@dataclass(frozen=True)
class ChatResponse:
    text: str
    backend_id: str
    latency: float
    from_cache: bool = False


def text_part(text: str) -> dict:
    return {"type": "text", "text": text}


def image_part(payload: ImagePayload) -> dict:
    return {"type": "image", "payload": payload}


def user_message(question: str, image: ImagePayload | None = None) -> dict:
    parts = [text_part(question)]
    if image is not None:
        parts.append(image_part(image))
    return {"role": "user", "content": parts}


def system_message(text: str) -> dict:
    return {"role": "system", "content": [text_part(text)]}


class Backend:
    """Shared concurrency bookkeeping; subclasses implement _complete."""

    def __init__(self, max_concurrency: int = 4):
        self._sem = threading.Semaphore(max_concurrency)
        self._lock = threading.Lock()
        self._in_flight = 0
        self.max_in_flight_seen = 0
        self.calls = 0

    def complete(self, req: ChatRequest) -> ChatResponse:
        with self._sem:
            with self._lock:
                self._in_flight += 1
                self.calls += 1
                self.max_in_flight_seen = max(self.max_in_flight_seen, self._in_flight)
            try:
                start = time.monotonic()
                text = self._complete(req)
                return ChatResponse(
                    text=text,
                    backend_id=self.backend_id,
                    latency=time.monotonic() - start,
                )
            finally:
                with self._lock:
                    self._in_flight -= 1

    @property
    def backend_id(self) -> str:
        raise NotImplementedError

    def _complete(self, req: ChatRequest) -> str:
        raise NotImplementedError


class MockBackend(Backend):
    """Deterministic scripted backend.

    Two scripting styles:
      - queue: a plain list of response texts, consumed in order;
      - matchers: (substring, response) pairs checked against the last
        user message, first match wins.
    Queue exhaustion or an unmatched request raises ProtocolError.
    """

    def __init__(self, queue=None, matchers=None, max_concurrency: int = 4):
        super().__init__(max_concurrency)
        self._queue = list(queue or [])
        self._matchers = list(matchers or [])
        self._queue_lock = threading.Lock()

    @property
    def backend_id(self) -> str:
        return "mock"

    def _complete(self, req: ChatRequest) -> str:
        user_text = req.last_user_text()
        for needle, response in self._matchers:
            if needle in user_text:
                return response
        with self._queue_lock:
            if self._queue:
                return self._queue.pop(0)
        raise ProtocolError(f"mock has no response for request: {user_text[:120]!r}")


def script_mock(steps, max_concurrency: int = 4) -> MockBackend:
    """Build a matcher-scripted mock; first-listed matcher wins."""
    if not steps:
        raise ValueError("steps must be non-empty")
    return MockBackend(matchers=steps, max_concurrency=max_concurrency)


def _encode_image(payload: ImagePayload) -> dict:
    if payload.is_url:
        return {"type": "image_url", "image_url": {"url": payload.url}}
    b64 = base64.b64encode(payload.data).decode("ascii")
    return {
        "type": "image_url",
        "image_url": {"url": f"data:{payload.media_type};base64,{b64}"},
    }


class LiveBackend(Backend):
    """OpenAI-compatible chat-completions client with retry/backoff."""

    def __init__(self, cfg: BackendConfig, session: requests.Session | None = None):
        super().__init__(cfg.max_concurrency)
        self.cfg = cfg
        self._session = session or requests.Session()
        self._api_key = os.environ.get(cfg.auth_env)
        if not self._api_key:
            raise AuthMissing(f"environment variable {cfg.auth_env} is not set")

    @property
    def backend_id(self) -> str:
        return self.cfg.model

    def _wire_messages(self, req: ChatRequest) -> list[dict]:
        wire = []
        for m in req.messages:
            content = []
            for part in m["content"]:
                if part.get("type") == "text":
                    content.append({"type": "text", "text": part["text"]})
                elif part.get("type") == "image":
                    content.append(_encode_image(part["payload"]))
                else:
                    raise ProtocolError(f"unknown content part {part!r}")
            wire.append({"role": m["role"], "content": content})
        return wire

    def _complete(self, req: ChatRequest) -> str:
        url = self.cfg.endpoint.rstrip("/") + "/chat/completions"
        body = {
            "model": self.cfg.model,
            "messages": self._wire_messages(req),
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        if req.seed is not None:
            body["seed"] = req.seed
        headers = {"Authorization": f"Bearer {self._api_key}"}
        policy = self.cfg.retry
        delay = policy.backoff
        last_error: Exception = ProtocolError("no attempt made")
        for attempt in range(policy.max_attempts):
            try:
                resp = self._session.post(url, json=body, headers=headers, timeout=120)
            except requests.Timeout:
                last_error = Timeout(url)
            except requests.RequestException as exc:
                last_error = ProtocolError(str(exc))
            else:
                if resp.status_code == 429:
                    last_error = RateLimited(resp.text[:200])
                elif resp.status_code >= 500:
                    last_error = ProtocolError(f"{resp.status_code}: {resp.text[:200]}")
                elif resp.status_code != 200:
                    # client errors are not retryable
                    raise ProtocolError(f"{resp.status_code}: {resp.text[:200]}")
                else:
                    try:
                        return resp.json()["choices"][0]["message"]["content"] or ""
                    except (KeyError, IndexError, ValueError) as exc:
                        raise ProtocolError(f"malformed response body: {exc}") from None
            if attempt + 1 < policy.max_attempts:
                log.warning("retrying after %s (attempt %d)", last_error, attempt + 1)
                time.sleep(delay)
                delay *= 2
        raise last_error


def make_backend(cfg: BackendConfig) -> Backend:
    if cfg.kind == "live":
        return LiveBackend(cfg)
    return MockBackend(max_concurrency=cfg.max_concurrency)


def complete(req: ChatRequest, backend: Backend) -> ChatResponse:
    """Single entry point used by all pipeline stages."""
    return backend.complete(req)
