"""Language-model backends.

``ScriptedBackend`` replays a JSON Lines fixture keyed by ``(task, call
index)``; ``OpenAIChatBackend`` talks to any OpenAI-compatible
``/chat/completions`` endpoint. Both expose
``complete(messages, task_id=..., purpose=...)``.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import httpx

logger = logging.getLogger(__name__)

API_KEY_ENV = "OPENAI_API_KEY"
MAX_RETRIES = 3
BACKOFF_BASE = 2.0
ROLES = ("system", "user", "assistant")


class BackendError(RuntimeError):
    """Raised when a backend cannot produce a completion."""


class ReplayUnderrun(BackendError):
    def __init__(self, task_id: str, index: int):
        super().__init__(f"fixture exhausted: no response for task {task_id!r} at call index {index}")
        self.task_id = task_id
        self.index = index


class FixtureError(ValueError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str
    model_id: str = "gpt-4o-mini"
    temperature: float = 0.0
    max_tokens: int = 1024
    template_set: str = "default"
    timeout: float = 60.0

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


class Backend:
    """Base class; subclasses implement :meth:`_complete`."""

    def __init__(self, config: BackendConfig):
        self.config = config
        self.calls = 0
        self.tokens = 0
        self._counter_lock = threading.Lock()

    def complete(self, messages: List[ChatMessage], *, task_id: str, purpose: str = "") -> str:
        if not messages:
            raise ValueError("complete() needs at least one message")
        text = self._complete(list(messages), task_id, purpose)
        with self._counter_lock:
            self.calls += 1
            self.tokens += sum(len(m.content.split()) for m in messages) + len(text.split())
        return text

    def _complete(self, messages: List[ChatMessage], task_id: str, purpose: str) -> str:
        raise NotImplementedError


# --------------------------------------------------------------------------
# fixtures and replay


@dataclass
class Fixture:
    entries: List[Tuple[Tuple[str, int], str]] = field(default_factory=list)

    def __post_init__(self):
        self._index: Dict[Tuple[str, int], str] = {}
        for key, response in self.entries:
            if key in self._index:
                raise FixtureError(f"duplicate fixture key task={key[0]!r} index={key[1]}")
            self._index[key] = response

    def get(self, task_id: str, index: int) -> Optional[str]:
        return self._index.get((task_id, index))

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def load(cls, path) -> "Fixture":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    key = (str(row["task"]), int(row["index"]))
                    response = str(row["response"])
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise FixtureError(f"{path}:{lineno}: bad fixture entry ({exc})") from None
                entries.append((key, response))
        return cls(entries)

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for (task, index), response in self.entries:
                fh.write(json.dumps({"task": task, "index": index, "response": response}, ensure_ascii=False) + "\n")


class ScriptedBackend(Backend):
    """Replays fixture responses in per-task call order; each key is consumed once."""

    def __init__(self, fixture: Fixture, config: Optional[BackendConfig] = None):
        super().__init__(config or BackendConfig(endpoint="scripted"))
        self.fixture = fixture
        self._next: Dict[str, int] = defaultdict(int)
        self._lock = threading.Lock()

    @classmethod
    def from_path(cls, path) -> "ScriptedBackend":
        return cls(Fixture.load(path), BackendConfig(endpoint=str(path)))

    def _complete(self, messages, task_id, purpose):
        with self._lock:
            index = self._next[task_id]
            self._next[task_id] = index + 1
        response = self.fixture.get(task_id, index)
        if response is None:
            raise ReplayUnderrun(task_id, index)
        return response


class RecordingBackend(Backend):
    """Wraps another backend and records every response as a fixture entry."""

    def __init__(self, inner: Backend):
        super().__init__(inner.config)
        self.inner = inner
        self.fixture_entries: List[Tuple[Tuple[str, int], str]] = []
        self._next: Dict[str, int] = defaultdict(int)
        self._lock = threading.Lock()

    def _complete(self, messages, task_id, purpose):
        text = self.inner.complete(messages, task_id=task_id, purpose=purpose)
        with self._lock:
            index = self._next[task_id]
            self._next[task_id] = index + 1
            self.fixture_entries.append(((task_id, index), text))
        return text

    def fixture(self) -> Fixture:
        return Fixture(list(self.fixture_entries))


# --------------------------------------------------------------------------
# live client


class OpenAIChatBackend(Backend):
    """Minimal OpenAI-compatible chat client with retry on transport errors and 429."""

    def __init__(
        self,
        config: BackendConfig,
        api_key: Optional[str] = None,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        super().__init__(config)
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self._client = httpx.Client(headers=headers, timeout=config.timeout, transport=transport)
        self._sleep = sleep

    def _payload(self, messages: Iterable[ChatMessage]) -> dict:
        return {
            "model": self.config.model_id,
            "messages": [m.to_dict() for m in messages],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }

    def _complete(self, messages, task_id, purpose):
        url = self.config.endpoint.rstrip("/") + "/chat/completions"
        payload = self._payload(messages)
        last_error = None
        for attempt in range(MAX_RETRIES + 1):
            if attempt:
                delay = BACKOFF_BASE * 2 ** (attempt - 1)
                logger.warning("retrying %s in %.0fs (%s)", url, delay, last_error)
                self._sleep(delay)
            try:
                resp = self._client.post(url, json=payload)
            except httpx.TransportError as exc:
                last_error = f"transport error: {exc}"
                continue
            if resp.status_code == 429:
                last_error = "HTTP 429 rate limited"
                continue
            if resp.status_code >= 400:
                raise BackendError(f"HTTP {resp.status_code} from {url}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed completion response: {exc}") from None
        raise BackendError(f"giving up after {MAX_RETRIES} retries: {last_error}")

    def close(self) -> None:
        self._client.close()


def bundled_fixture_path(name: str) -> Path:
    return Path(__file__).parent / "data" / "fixtures" / f"{name}.jsonl"


def make_backend(spec: str, model_id: str = "gpt-4o-mini") -> Backend:
    """Build a backend from ``scripted:PATH`` or ``live:URL``.

    A scripted path that does not exist is looked up among the bundled
    fixtures by name (``scripted:fcrf_demo``).
    """
    kind, _, target = spec.partition(":")
    if kind == "scripted" and target:
        path = Path(target)
        if not path.exists() and bundled_fixture_path(target).exists():
            path = bundled_fixture_path(target)
        if not path.exists():
            raise FileNotFoundError(f"fixture not found: {target}")
        return ScriptedBackend.from_path(path)
    if kind == "live" and target:
        return OpenAIChatBackend(BackendConfig(endpoint=target, model_id=model_id))
    raise ValueError(f"backend spec must be scripted:PATH or live:URL, got {spec!r}")
