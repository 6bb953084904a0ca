"""Chat-completions clients used for the policy, the verifiers, VQA and the judge.

Messages use the usual ``{"role", "content"}`` shape. ``content`` is either a
string or a list of parts; image parts carry an :class:`ImageHandle` in-process
and are converted to ``image_url`` data URLs only at the HTTP boundary.
"""

from __future__ import annotations

import logging
import threading
import time
from abc import ABC, abstractmethod
from typing import Any, Callable, Iterable, Sequence

import httpx

from visreason.tools.types import ImageHandle, ProviderError

log = logging.getLogger(__name__)

Message = dict[str, Any]


def text_part(text: str) -> dict[str, Any]:
    return {"type": "text", "text": text}


def image_part(image: ImageHandle) -> dict[str, Any]:
    return {"type": "image", "image": image}


def user_message(*items: str | ImageHandle) -> Message:
    if len(items) == 1 and isinstance(items[0], str):
        return {"role": "user", "content": items[0]}
    parts = [image_part(i) if isinstance(i, ImageHandle) else text_part(i) for i in items]
    return {"role": "user", "content": parts}


def message_text(messages: Sequence[Message]) -> str:
    """All text content of a conversation, concatenated; used by scripted responders."""
    chunks = []
    for m in messages:
        content = m["content"]
        if isinstance(content, str):
            chunks.append(content)
        else:
            chunks.extend(p["text"] for p in content if p["type"] == "text")
    return "\n".join(chunks)


def message_images(messages: Sequence[Message]) -> list[ImageHandle]:
    return [
        p["image"]
        for m in messages
        if not isinstance(m["content"], str)
        for p in m["content"]
        if p["type"] == "image"
    ]


def canonical_messages(messages: Sequence[Message]) -> list[dict[str, Any]]:
    """JSON-safe view of a conversation with images replaced by their digests."""
    out = []
    for m in messages:
        content = m["content"]
        if not isinstance(content, str):
            content = [
                {"type": "image", "sha256": p["image"].digest} if p["type"] == "image" else dict(p)
                for p in content
            ]
        out.append({"role": m["role"], "content": content})
    return out


def wire_messages(messages: Sequence[Message]) -> list[dict[str, Any]]:
    out = []
    for m in messages:
        content = m["content"]
        if not isinstance(content, str):
            content = [
                {"type": "image_url", "image_url": {"url": p["image"].data_url()}} if p["type"] == "image" else dict(p)
                for p in content
            ]
        out.append({"role": m["role"], "content": content})
    return out


class ChatClient(ABC):
    """One chat-completion endpoint: a model name plus fixed sampling settings."""

    name: str = "chat"
    deterministic: bool = False

    @abstractmethod
    def complete(self, messages: Sequence[Message], **params: Any) -> str:
        """Return the assistant text; raise :class:`ProviderError` on any failure."""


class HttpChatClient(ChatClient):
    def __init__(
        self,
        base_url: str,
        model: str,
        token: str | None = None,
        *,
        timeout: float = 120.0,
        max_in_flight: int = 8,
        default_params: dict[str, Any] | None = None,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self.name = model
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.default_params = dict(default_params or {})
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        self._http = httpx.Client(timeout=timeout, headers=headers, transport=transport)
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def complete(self, messages: Sequence[Message], **params: Any) -> str:
        body = {"model": self.model, "messages": wire_messages(messages), **self.default_params, **params}
        with self._slots:
            try:
                resp = self._http.post(f"{self.base_url}/chat/completions", json=body)
                resp.raise_for_status()
                payload = resp.json()
            except (httpx.HTTPError, ValueError) as exc:
                raise ProviderError(f"{self.model}: {exc}") from exc
        try:
            content = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"{self.model}: malformed completion payload") from exc
        if not isinstance(content, str):
            raise ProviderError(f"{self.model}: completion content is not text")
        return content

    def close(self) -> None:
        self._http.close()


Responder = Callable[[Sequence[Message]], "str | BaseException"]


class ScriptedChatClient(ChatClient):
    """Deterministic test double.

    Either a ``responder`` maps the conversation to a reply, or ``replies`` is a
    queue consumed in call order. A returned exception instance is raised.
    Every request is recorded in :attr:`requests`.
    """

    deterministic = True

    def __init__(
        self,
        responder: Responder | None = None,
        replies: Iterable[str | BaseException] | None = None,
        name: str = "scripted",
    ) -> None:
        if (responder is None) == (replies is None):
            raise ValueError("pass exactly one of responder or replies")
        self.name = name
        self._responder = responder
        self._replies = list(replies) if replies is not None else None
        self._lock = threading.Lock()
        self.requests: list[tuple[list[Message], dict[str, Any]]] = []

    def complete(self, messages: Sequence[Message], **params: Any) -> str:
        with self._lock:
            self.requests.append((list(messages), dict(params)))
            if self._replies is not None:
                if not self._replies:
                    raise ProviderError(f"{self.name}: script exhausted")
                reply = self._replies.pop(0)
            else:
                reply = None
        if reply is None:
            reply = self._responder(messages)
        if isinstance(reply, BaseException):
            raise reply
        return reply

    @property
    def call_count(self) -> int:
        return len(self.requests)


class RuleChatClient(ChatClient):
    """Substring-rule responder loaded from a JSON fixture; first matching rule wins.

    Rules look like ``{"match": "...", "reply": "..."}``; ``match`` is searched in
    the concatenated message text. ``default`` answers everything else.
    """

    deterministic = True

    def __init__(self, rules: Sequence[dict[str, str]], default: str | None = None, name: str = "rules") -> None:
        self.name = name
        self.rules = [(r["match"], r["reply"]) for r in rules]
        self.default = default

    def complete(self, messages: Sequence[Message], **params: Any) -> str:
        text = message_text(messages)
        for needle, reply in self.rules:
            if needle in text:
                return reply
        if self.default is None:
            raise ProviderError(f"{self.name}: no rule matches request")
        return self.default


def call_with_retries(fn: Callable[[], str], attempts: int = 3, backoff: float = 0.0) -> str:
    """Call ``fn`` up to ``attempts`` times, retrying only on :class:`ProviderError`."""
    last: ProviderError | None = None
    for attempt in range(attempts):
        try:
            return fn()
        except ProviderError as exc:
            last = exc
            log.warning("provider call failed (attempt %d/%d): %s", attempt + 1, attempts, exc)
            if backoff and attempt + 1 < attempts:
                time.sleep(backoff * 2**attempt)
    assert last is not None
    raise last
