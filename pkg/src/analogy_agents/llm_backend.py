"""Chat-completion backends: live HTTP, cassette replay/record, and scripted.

Every backend exposes ``complete(request) -> CompletionResponse`` and is safe
to share between run workers.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Protocol, TypeVar

import httpx

from .errors import (
    AuthError,
    BackendError,
    BackendUnavailable,
    ContextOverflow,
    ParseError,
    PreconditionViolation,
    RateLimited,
    ReplayMiss,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

Role = Literal["system", "user", "assistant"]
ROLES: tuple[str, ...] = ("system", "user", "assistant")

DEFAULT_TEMPERATURE = 0.7
DEFAULT_MAX_TOKENS = 1024


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise PreconditionViolation(f"unknown role {self.role!r}")
        if not self.content or not self.content.strip():
            raise PreconditionViolation("message content must be non-empty")


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    seed: int
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise PreconditionViolation("a completion request needs at least one message")
        if any(m.role == "system" for m in self.messages[1:]):
            raise PreconditionViolation("only the first message may be a system message")
        if self.temperature < 0:
            raise PreconditionViolation("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise PreconditionViolation("max_tokens must be positive")
        if not self.model_id:
            raise PreconditionViolation("model_id must be non-empty")

    @property
    def digest(self) -> str:
        return request_digest(self)


@dataclass(frozen=True)
class CompletionResponse:
    content: str
    prompt_tokens: int = 0
    completion_tokens: int = 0

    def __post_init__(self) -> None:
        if self.prompt_tokens < 0 or self.completion_tokens < 0:
            raise PreconditionViolation("token counts must be non-negative")

    def to_dict(self) -> dict:
        return {
            "content": self.content,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
        }

    @classmethod
    def from_dict(cls, data: dict) -> CompletionResponse:
        return cls(
            content=data["content"],
            prompt_tokens=int(data.get("prompt_tokens", 0)),
            completion_tokens=int(data.get("completion_tokens", 0)),
        )


def canonical_request(request: CompletionRequest) -> bytes:
    """Byte-stable encoding of the fields that identify a request.

    ``max_tokens`` is left out on purpose so that changing the output budget
    does not invalidate recorded cassettes.
    """
    payload = {
        "model": request.model_id,
        "temperature": float(request.temperature),
        "seed": int(request.seed),
        "messages": [f"{m.role}:{m.content}" for m in request.messages],
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def request_digest(request: CompletionRequest) -> str:
    return hashlib.sha256(canonical_request(request)).hexdigest()


class Backend(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResponse: ...


# --- cassettes -----------------------------------------------------------------


class ReplayCassette:
    """Ordered digest -> response mapping persisted as JSON lines."""

    def __init__(self, entries: Iterable[tuple[str, CompletionResponse]] = ()):
        self._entries: dict[str, CompletionResponse] = {}
        for digest, response in entries:
            self._entries[digest] = response

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, digest: object) -> bool:
        return digest in self._entries

    @property
    def entries(self) -> list[tuple[str, CompletionResponse]]:
        return list(self._entries.items())

    def lookup(self, request: CompletionRequest) -> CompletionResponse:
        digest = request_digest(request)
        try:
            return self._entries[digest]
        except KeyError:
            raise ReplayMiss(digest) from None

    def record(self, request: CompletionRequest, response: CompletionResponse) -> ReplayCassette:
        digest = request_digest(request)
        if digest in self._entries:
            logger.warning("overwriting cassette entry %s", digest[:12])
        self._entries[digest] = response
        return self

    @classmethod
    def load(cls, path: str | Path) -> ReplayCassette:
        entries = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    entries.append((row["digest"], CompletionResponse.from_dict(row["response"])))
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise BackendError(f"{path}:{lineno}: bad cassette line ({exc})") from exc
        return cls(entries)

    @classmethod
    def load_many(cls, paths: Iterable[str | Path]) -> ReplayCassette:
        merged = cls()
        for path in paths:
            merged._entries.update(cls.load(path)._entries)
        return merged

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for digest, response in self._entries.items():
                fh.write(_cassette_line(digest, response))
        os.replace(tmp, path)


def _cassette_line(digest: str, response: CompletionResponse) -> str:
    row = {"digest": digest, "response": response.to_dict()}
    return json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n"


class ReplayBackend:
    def __init__(self, cassette: ReplayCassette):
        self.cassette = cassette

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        return self.cassette.lookup(request)


class RecordingBackend:
    """Wraps another backend and writes every exchange to a cassette file."""

    def __init__(self, inner: Backend, path: str | Path, cassette: ReplayCassette | None = None):
        self.inner = inner
        self.path = Path(path)
        self.cassette = cassette if cassette is not None else ReplayCassette()
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        response = self.inner.complete(request)
        self.record(request, response)
        return response

    def record(self, request: CompletionRequest, response: CompletionResponse) -> ReplayCassette:
        digest = request_digest(request)
        with self._lock:
            duplicate = digest in self.cassette
            self.cassette.record(request, response)
            try:
                if duplicate:
                    self.cassette.save(self.path)
                else:
                    self.path.parent.mkdir(parents=True, exist_ok=True)
                    with open(self.path, "a", encoding="utf-8") as fh:
                        fh.write(_cassette_line(digest, response))
            except OSError as exc:
                raise BackendError(f"cannot persist cassette {self.path}: {exc}") from exc
        return self.cassette


class ScriptedBackend:
    """Offline backend driven by a fixed reply list or a reply function.

    Every request is kept in ``requests`` so tests can inspect prompts.
    """

    def __init__(self, replies: Sequence[str] | Callable[[CompletionRequest], str]):
        self._replies = replies if callable(replies) else list(replies)
        self._cursor = 0
        self._lock = threading.Lock()
        self.requests: list[CompletionRequest] = []

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        with self._lock:
            self.requests.append(request)
            if callable(self._replies):
                content = self._replies(request)
            else:
                if self._cursor >= len(self._replies):
                    raise ReplayMiss(request_digest(request))
                content = self._replies[self._cursor]
                self._cursor += 1
        prompt_words = sum(len(m.content.split()) for m in request.messages)
        return CompletionResponse(content, prompt_tokens=prompt_words, completion_tokens=len(content.split()))


# --- live HTTP -------------------------------------------------------------------


def backoff_delay(attempt: int, base: float = 1.0, cap: float = 30.0) -> float:
    """Delay before retry number ``attempt`` (1-based), exponential and capped."""
    if attempt < 1:
        raise PreconditionViolation("attempt numbers start at 1")
    return min(cap, base * 2.0 ** (attempt - 1))


@dataclass
class RetryPolicy:
    attempts: int = 5
    base: float = 1.0
    cap: float = 30.0


@dataclass
class LiveBackend:
    """OpenAI-compatible ``/chat/completions`` client with capped backoff."""

    endpoint: str
    api_key: str
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    timeout: float = 120.0
    warn_prompt_tokens: int = 12000
    transport: httpx.BaseTransport | None = None
    sleep: Callable[[float], None] = time.sleep

    def __post_init__(self) -> None:
        self._client = httpx.Client(
            base_url=self.endpoint.rstrip("/"),
            timeout=self.timeout,
            transport=self.transport,
            headers={"Authorization": f"Bearer {self.api_key}"},
        )
        # earliest monotonic time any worker may send again after a 429
        self._not_before = 0.0
        self._lock = threading.Lock()

    @classmethod
    def from_env(cls, endpoint: str, env_var: str = "OPENAI_API_KEY", **kwargs) -> LiveBackend:
        key = os.environ.get(env_var)
        if not key:
            raise AuthError(f"environment variable {env_var} is not set")
        return cls(endpoint=endpoint, api_key=key, **kwargs)

    def _wait_turn(self) -> None:
        with self._lock:
            wait = self._not_before - time.monotonic()
        if wait > 0:
            self.sleep(wait)

    def _push_back(self, delay: float) -> None:
        with self._lock:
            self._not_before = max(self._not_before, time.monotonic() + delay)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        body = {
            "model": request.model_id,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "seed": request.seed,
            "max_tokens": request.max_tokens,
        }
        last_error: BackendError | None = None
        for attempt in range(1, self.retry.attempts + 1):
            self._wait_turn()
            try:
                resp = self._client.post("/chat/completions", json=body)
            except httpx.TransportError as exc:
                last_error = BackendUnavailable(f"transport error: {exc}")
            else:
                if resp.status_code == 200:
                    return self._parse(resp)
                last_error = self._classify(resp)
            if attempt < self.retry.attempts:
                delay = backoff_delay(attempt, self.retry.base, self.retry.cap)
                logger.warning("completion attempt %d failed (%s); retrying in %.1fs", attempt, last_error, delay)
                if isinstance(last_error, RateLimited):
                    self._push_back(delay)  # honoured by every worker at the top of the loop
                else:
                    self.sleep(delay)
        assert last_error is not None
        raise last_error

    def _classify(self, resp: httpx.Response) -> BackendError:
        text = resp.text[:500]
        if resp.status_code in (401, 403):
            raise AuthError(f"provider rejected credential ({resp.status_code}): {text}")
        if resp.status_code == 429:
            return RateLimited(f"rate limited: {text}")
        if resp.status_code in (400, 413) and ("context_length" in text or "maximum context" in text):
            raise ContextOverflow(text)
        if resp.status_code >= 500 or resp.status_code == 408:
            return BackendUnavailable(f"provider error {resp.status_code}: {text}")
        raise BackendError(f"provider returned {resp.status_code}: {text}")

    def _parse(self, resp: httpx.Response) -> CompletionResponse:
        try:
            data = resp.json()
            content = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion payload: {exc}") from exc
        usage = data.get("usage") or {}
        prompt_tokens = int(usage.get("prompt_tokens", 0))
        if prompt_tokens > self.warn_prompt_tokens:
            logger.warning("prompt used %d tokens (advisory limit %d)", prompt_tokens, self.warn_prompt_tokens)
        return CompletionResponse(
            content=content or "",
            prompt_tokens=prompt_tokens,
            completion_tokens=int(usage.get("completion_tokens", 0)),
        )

    def close(self) -> None:
        self._client.close()


# --- request helper ------------------------------------------------------------------


@dataclass
class LLM:
    """Binds a backend to one run's model id, seed and sampling settings."""

    backend: Backend
    model_id: str
    seed: int
    temperature: float = DEFAULT_TEMPERATURE
    max_tokens: int = DEFAULT_MAX_TOKENS

    def request(self, messages: Sequence[ChatMessage]) -> CompletionRequest:
        return CompletionRequest(self.model_id, tuple(messages), self.seed, self.temperature, self.max_tokens)

    def ask(self, system: str | None, user: str) -> str:
        return self.backend.complete(self.request(_messages(system, user))).content

    def ask_parsed(self, system: str | None, user: str, parse: Callable[[str], T], reminder: str) -> T:
        """Ask, parse, and on ``ParseError`` retry once with a format reminder."""
        messages = _messages(system, user)
        first = self.backend.complete(self.request(messages)).content
        try:
            return parse(first)
        except ParseError as exc:
            logger.info("reply failed to parse (%s); retrying with a reminder", exc)
        messages += [ChatMessage("assistant", first if first.strip() else "(empty reply)"),
                     ChatMessage("user", reminder)]
        return parse(self.backend.complete(self.request(messages)).content)


def _messages(system: str | None, user: str) -> list[ChatMessage]:
    out = [ChatMessage("system", system)] if system else []
    out.append(ChatMessage("user", user))
    return out
