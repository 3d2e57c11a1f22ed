"""LLM backends: an OpenAI-compatible HTTP client and a scripted mock.

The mock is keyed purely by a digest of the rendered prompt, which
makes every pipeline run over it deterministic and lets tests script
exact conversations. The HTTP client speaks the chat-completions wire
format with bounded retries and consumes the usage field when present.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, Union

import requests

API_KEY_ENV = "IR_AGENT_API_KEY"

#: Characters per token assumed when a backend reports no usage.
CHARS_PER_TOKEN = 4


class BackendError(RuntimeError):
    def __init__(self, message: str, category: str = "backend"):
        super().__init__(message)
        self.category = category


@dataclass(frozen=True)
class LlmResponse:
    content: str
    usage: Optional[Tuple[int, int]] = None  # (input tokens, output tokens)


def prompt_digest(system: str, user: str) -> str:
    h = hashlib.sha256()
    h.update(system.encode("utf-8"))
    h.update(b"\x1e")
    h.update(user.encode("utf-8"))
    return h.hexdigest()


def estimate_tokens(text: str) -> int:
    """Character-quotient token estimate: ceil(len/4)."""
    return math.ceil(len(text) / CHARS_PER_TOKEN)


class LlmBackend:
    def complete(self, system: str, user: str) -> LlmResponse:
        raise NotImplementedError


DefaultResponse = Union[str, dict, Callable[[str, str], LlmResponse], None]


class MockBackend(LlmBackend):
    """Deterministic scripted backend keyed by prompt digest.

    `responses` maps digest -> {"content": str, "usage": [in, out]|null}.
    An unmatched digest falls back to `default` (a string, a response
    dict, or a callable) when given, and raises otherwise (test mode).
    """

    def __init__(self, responses: Optional[Dict[str, dict]] = None,
                 default: DefaultResponse = None, record: bool = False):
        self.responses = dict(responses or {})
        self.default = default
        self.record = record
        self._lock = threading.Lock()
        self.calls: List[str] = []

    @classmethod
    def from_file(cls, path) -> "MockBackend":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        default = doc.pop("__default__", None)
        return cls(responses=doc, default=default)

    def save(self, path) -> None:
        """Persist the (possibly recorded) digest->response script."""
        doc = dict(self.responses)
        if isinstance(self.default, (str, dict)):
            doc["__default__"] = self.default
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=2)

    @property
    def call_count(self) -> int:
        with self._lock:
            return len(self.calls)

    def reset_calls(self) -> None:
        with self._lock:
            self.calls.clear()

    def complete(self, system: str, user: str) -> LlmResponse:
        digest = prompt_digest(system, user)
        with self._lock:
            self.calls.append(digest)
        entry = self.responses.get(digest)
        if entry is None:
            if self.default is None:
                raise BackendError(
                    f"no scripted response for prompt digest {digest}",
                    category="mock-miss",
                )
            if callable(self.default):
                resp = self.default(system, user)
                if self.record:
                    with self._lock:
                        self.responses[digest] = {
                            "content": resp.content,
                            "usage": list(resp.usage) if resp.usage else None,
                        }
                return resp
            entry = {"content": self.default} if isinstance(self.default, str) else self.default
        usage = entry.get("usage")
        return LlmResponse(
            content=entry["content"],
            usage=tuple(usage) if usage else None,
        )


class HttpChatBackend(LlmBackend):
    """Chat-completions client for an OpenAI-compatible endpoint."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        temperature: float = 0.8,
        timeout: float = 60.0,
        retries: int = 3,
        backoff: float = 1.0,
        api_key: Optional[str] = None,
        seed: Optional[int] = None,
    ):
        if temperature < 0:
            raise BackendError("temperature must be >= 0", category="config")
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.seed = seed
        self._api_key = api_key

    def _headers(self) -> dict:
        key = self._api_key if self._api_key is not None else os.environ.get(API_KEY_ENV, "")
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, system: str, user: str) -> LlmResponse:
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        }
        if self.seed is not None:
            body["seed"] = self.seed
        last_error: Optional[str] = None
        for attempt in range(self.retries):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = requests.post(
                    self.endpoint, json=body, headers=self._headers(),
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                last_error = f"request failed: {exc}"
                continue
            if resp.status_code >= 500 or resp.status_code == 429:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise BackendError(
                    f"HTTP {resp.status_code}: {resp.text[:200]}", category="http"
                )
            try:
                doc = resp.json()
                content = doc["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed response: {exc}", category="http") from exc
            usage = None
            u = doc.get("usage")
            if isinstance(u, dict) and "prompt_tokens" in u and "completion_tokens" in u:
                usage = (int(u["prompt_tokens"]), int(u["completion_tokens"]))
            return LlmResponse(content=content, usage=usage)
        raise BackendError(
            f"exhausted {self.retries} attempts: {last_error}", category="http-retry"
        )
