"""Record/replay of every external call (vision tools and chat completions).

A cassette is a JSON array of ``{key, tool, request, response, recorded_at}``
entries. The key is a content hash of the tool name, the canonicalized
arguments and the image digest, so lookups do not depend on call order.
``response`` is ``{"value": ...}`` or ``{"error": message}``; recorded provider
failures replay as the same failure.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

from visreason import serialize
from visreason.geometry import BBox
from visreason.tools.chat import ChatClient, Message, canonical_messages
from visreason.tools.providers import ToolProvider
from visreason.tools.types import Detection, ImageHandle, ProviderError


class UnrecordedCall(LookupError):
    """Replay hit a request absent from the cassette. Never falls back to a live call."""


def request_key(tool: str, request: dict[str, Any]) -> str:
    return serialize.content_key({"tool": tool, "request": request})


class CassetteStore:
    """Thread-safe in-memory cassette with optional file persistence."""

    def __init__(self, path: str | Path | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, dict[str, Any]] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            for entry in json.loads(self.path.read_text(encoding="utf-8")):
                self._entries[entry["key"]] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def entries(self) -> list[dict[str, Any]]:
        with self._lock:
            return list(self._entries.values())

    def lookup(self, key: str) -> dict[str, Any]:
        try:
            return self._entries[key]
        except KeyError:
            raise UnrecordedCall(f"no cassette entry for key {key[:16]}...") from None

    def append(self, tool: str, request: dict[str, Any], response: dict[str, Any]) -> str:
        key = request_key(tool, request)
        entry = {
            "key": key,
            "tool": tool,
            "request": request,
            "response": response,
            "recorded_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        with self._lock:
            self._entries.setdefault(key, entry)
        return key

    def save(self, path: str | Path | None = None) -> None:
        target = Path(path) if path is not None else self.path
        if target is None:
            raise ValueError("cassette has no path")
        body = ",\n".join(serialize.dumps(e) for e in self.entries())
        serialize.atomic_write_text(target, f"[\n{body}\n]\n" if body else "[]\n")


def _record(store: CassetteStore, tool: str, request: dict[str, Any], call: Callable[[], Any], encode: Callable[[Any], Any]) -> Any:
    try:
        value = call()
    except ProviderError as exc:
        store.append(tool, request, {"error": str(exc)})
        raise
    store.append(tool, request, {"value": encode(value)})
    return value


def _replay(store: CassetteStore, tool: str, request: dict[str, Any]) -> Any:
    response = store.lookup(request_key(tool, request))["response"]
    if "error" in response:
        raise ProviderError(response["error"])
    return response["value"]


def _detect_request(image: ImageHandle, prompt: str, box_threshold: float, text_threshold: float) -> dict[str, Any]:
    return {"image": image.digest, "prompt": prompt, "box_threshold": box_threshold, "text_threshold": text_threshold}


def _box_request(image: ImageHandle, bbox: BBox | None, **extra: Any) -> dict[str, Any]:
    return {"image": image.digest, "bbox": bbox.as_list() if bbox is not None else None, **extra}


class RecordingToolProvider(ToolProvider):
    def __init__(self, inner: ToolProvider, store: CassetteStore) -> None:
        self.inner = inner
        self.store = store
        self.deterministic = inner.deterministic

    def detect(self, image, prompt, box_threshold=0.35, text_threshold=0.25):
        return _record(
            self.store,
            "detect",
            _detect_request(image, prompt, box_threshold, text_threshold),
            lambda: self.inner.detect(image, prompt, box_threshold, text_threshold),
            lambda dets: [d.to_json() for d in dets],
        )

    def depth_at(self, image, bbox):
        return _record(self.store, "depth", _box_request(image, bbox), lambda: self.inner.depth_at(image, bbox), float)

    def vqa(self, image, bbox, question):
        return _record(
            self.store, "vqa", _box_request(image, bbox, question=question), lambda: self.inner.vqa(image, bbox, question), str
        )

    def _detect(self, *a):  # pragma: no cover - public methods delegate
        raise NotImplementedError

    _depth = _vqa = _detect


class ReplayToolProvider(ToolProvider):
    """Serves recorded tool responses; any unrecorded request raises :class:`UnrecordedCall`."""

    deterministic = True

    def __init__(self, store: CassetteStore) -> None:
        self.store = store

    def detect(self, image, prompt, box_threshold=0.35, text_threshold=0.25):
        raw = _replay(self.store, "detect", _detect_request(image, prompt, box_threshold, text_threshold))
        return [Detection.from_json(d) for d in raw]

    def depth_at(self, image, bbox):
        return float(_replay(self.store, "depth", _box_request(image, bbox)))

    def vqa(self, image, bbox, question):
        return _replay(self.store, "vqa", _box_request(image, bbox, question=question))

    def _detect(self, *a):  # pragma: no cover - public methods delegate
        raise NotImplementedError

    _depth = _vqa = _detect


def _chat_request(name: str, messages: Sequence[Message], params: dict[str, Any]) -> dict[str, Any]:
    return {"model": name, "messages": canonical_messages(messages), "params": params}


class RecordingChatClient(ChatClient):
    def __init__(self, inner: ChatClient, store: CassetteStore) -> None:
        self.inner = inner
        self.store = store
        self.name = inner.name
        self.deterministic = inner.deterministic

    def complete(self, messages, **params):
        return _record(
            self.store, "chat", _chat_request(self.name, messages, params), lambda: self.inner.complete(messages, **params), str
        )


class ReplayChatClient(ChatClient):
    deterministic = True

    def __init__(self, store: CassetteStore, name: str) -> None:
        self.store = store
        self.name = name

    def complete(self, messages, **params):
        return _replay(self.store, "chat", _chat_request(self.name, messages, params))
