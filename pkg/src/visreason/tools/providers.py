"""Vision tool backends: the provider contract plus mock, dummy and live-HTTP implementations."""

from __future__ import annotations

import json
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import httpx

from visreason.geometry import BBox, InvalidBox
from visreason.tools.chat import ChatClient, user_message
from visreason.tools.imaging import crop_and_upscale
from visreason.tools.types import Detection, EmptyPrompt, ImageHandle, ProviderError

REASONING_BOX_THRESHOLD = 0.35
REASONING_TEXT_THRESHOLD = 0.25


def split_prompt(prompt: str) -> list[str]:
    return [p.strip() for p in prompt.split(",") if p.strip()]


def _check_threshold(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def clip_to_image(det: Detection, image: ImageHandle) -> Detection | None:
    b = det.bbox
    x2, y2 = min(b.x2, float(image.width)), min(b.y2, float(image.height))
    if (x2, y2) == (b.x2, b.y2):
        return det
    try:
        return Detection(BBox(b.x1, b.y1, x2, y2), det.label, det.score)
    except InvalidBox:
        return None


class ToolProvider(ABC):
    """detect / depth_at / vqa over an image.

    The public methods enforce the shared contract (threshold filtering, bounds,
    positive depth); subclasses implement the underscored hooks.
    """

    deterministic: bool = True

    def detect(
        self,
        image: ImageHandle,
        prompt: str,
        box_threshold: float = REASONING_BOX_THRESHOLD,
        text_threshold: float = REASONING_TEXT_THRESHOLD,
    ) -> list[Detection]:
        if not split_prompt(prompt):
            raise EmptyPrompt("detection prompt is empty")
        _check_threshold("box_threshold", box_threshold)
        _check_threshold("text_threshold", text_threshold)
        out = []
        for det in self._detect(image, prompt, box_threshold, text_threshold):
            if det.score < box_threshold:
                continue
            clipped = clip_to_image(det, image)
            if clipped is not None:
                out.append(clipped)
        return out

    def depth_at(self, image: ImageHandle, bbox: BBox) -> float:
        image.check_box(bbox)
        value = self._depth(image, bbox)
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value) or value <= 0:
            raise ProviderError(f"depth backend returned invalid depth {value!r}")
        return float(value)

    def vqa(self, image: ImageHandle, bbox: BBox | None, question: str) -> str:
        if bbox is not None:
            image.check_box(bbox)
        return self._vqa(image, bbox, question)

    @abstractmethod
    def _detect(self, image: ImageHandle, prompt: str, box_threshold: float, text_threshold: float) -> Sequence[Detection]: ...

    @abstractmethod
    def _depth(self, image: ImageHandle, bbox: BBox) -> float: ...

    @abstractmethod
    def _vqa(self, image: ImageHandle, bbox: BBox | None, question: str) -> str: ...


@dataclass
class VqaRule:
    question: str
    answer: str
    bbox: BBox | None = None


@dataclass
class MockScene:
    """Authored ground truth for one image.

    Depth is piecewise constant: the last ``depth_regions`` entry whose box covers a
    pixel wins, ``background_depth`` elsewhere.
    """

    width: int
    height: int
    detections: list[Detection] = field(default_factory=list)
    depth_regions: list[tuple[BBox, float]] = field(default_factory=list)
    background_depth: float = 10.0
    vqa_rules: list[VqaRule] = field(default_factory=list)
    vqa_default: str = "no"

    def pixel_depth(self, x: float, y: float) -> float:
        value = self.background_depth
        for box, d in self.depth_regions:
            if box.x1 <= x < box.x2 and box.y1 <= y < box.y2:
                value = d
        return value

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "MockScene":
        return cls(
            width=int(obj["width"]),
            height=int(obj["height"]),
            detections=[Detection.from_json(d) for d in obj.get("detections", [])],
            depth_regions=[(BBox.from_seq(r["bbox"]), float(r["depth"])) for r in obj.get("depth_regions", [])],
            background_depth=float(obj.get("background_depth", 10.0)),
            vqa_rules=[
                VqaRule(r["question"], r["answer"], BBox.from_seq(r["bbox"]) if r.get("bbox") is not None else None)
                for r in obj.get("vqa", [])
            ],
            vqa_default=obj.get("vqa_default", "no"),
        )


def _label_matches(noun: str, label: str) -> bool:
    noun, label = noun.lower().strip(), label.lower().strip()
    if noun.startswith("the "):
        noun = noun[4:]
    return noun == label or label in noun or noun in label


class MockToolProvider(ToolProvider):
    """Pure, deterministic provider over authored scenes.

    Scenes are looked up by the image ref, then by its file name. A detection is
    returned when its label matches any comma-separated noun of the prompt.
    ``text_threshold`` has no meaning for authored scores and is ignored.
    """

    deterministic = True

    def __init__(self, scenes: dict[str, MockScene], default: MockScene | None = None) -> None:
        self.scenes = dict(scenes)
        self.default = default

    @classmethod
    def from_file(cls, path: str | Path) -> "MockToolProvider":
        raw = json.loads(Path(path).read_text())
        default = MockScene.from_json(raw["default"]) if raw.get("default") else None
        return cls({k: MockScene.from_json(v) for k, v in raw.get("scenes", {}).items()}, default)

    def scene(self, image: ImageHandle) -> MockScene:
        for key in (image.ref, Path(image.ref).name):
            if key in self.scenes:
                return self.scenes[key]
        if self.default is not None:
            return self.default
        raise ProviderError(f"no mock scene for image {image.ref!r}")

    def _detect(self, image, prompt, box_threshold, text_threshold):
        nouns = split_prompt(prompt)
        return [d for d in self.scene(image).detections if any(_label_matches(n, d.label) for n in nouns)]

    def _depth(self, image, bbox):
        scene = self.scene(image)
        cx, cy = (bbox.x1 + bbox.x2) / 2, (bbox.y1 + bbox.y2) / 2
        col = min(int(math.floor(cx)), scene.width - 1)
        row = min(int(math.floor(cy)), scene.height - 1)
        return scene.pixel_depth(col, row)

    def _vqa(self, image, bbox, question):
        scene = self.scene(image)
        q = question.strip().lower()
        for rule in scene.vqa_rules:
            if rule.question.strip().lower() == q and rule.bbox == bbox:
                return rule.answer
        return scene.vqa_default


class DummyToolProvider(ToolProvider):
    """Stand-in tools for dry runs.

    Detection yields two synthetic boxes whose labels cycle through the prompt's
    nouns, so label-matching loops see both branches. Depth is 1.0 and VQA
    answers "yes". Boxes passed back in are accepted without a bounds check.
    """

    deterministic = True
    BOXES = (BBox(10, 10, 110, 210), BBox(200, 40, 320, 160))

    def _detect(self, image, prompt, box_threshold, text_threshold):
        nouns = split_prompt(prompt)
        return [Detection(box, nouns[i % len(nouns)], 0.9 - 0.1 * i) for i, box in enumerate(self.BOXES)]

    def depth_at(self, image, bbox):
        return 1.0

    def vqa(self, image, bbox, question):
        return "yes"

    def _depth(self, image, bbox):
        return 1.0

    def _vqa(self, image, bbox, question):
        return "yes"


def vqa_view(image: ImageHandle, bbox: BBox | None) -> ImageHandle:
    """The image a VQA model actually sees: the upscaled crop, or the full frame."""
    return image if bbox is None else crop_and_upscale(image, bbox)


class HttpToolProvider(ToolProvider):
    """Detector and depth over the JSON-over-HTTP contract; VQA over chat completions."""

    deterministic = False

    def __init__(
        self,
        detector_url: str,
        depth_url: str,
        vqa_client: ChatClient,
        *,
        timeout: float = 60.0,
        max_in_flight: int = 8,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self.detector_url = detector_url.rstrip("/")
        self.depth_url = depth_url.rstrip("/")
        self.vqa_client = vqa_client
        self._http = httpx.Client(timeout=timeout, transport=transport)
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def _post(self, url: str, body: dict[str, Any]) -> Any:
        with self._slots:
            try:
                resp = self._http.post(url, json=body)
                resp.raise_for_status()
                return resp.json()
            except (httpx.HTTPError, ValueError) as exc:
                raise ProviderError(f"{url}: {exc}") from exc

    def _detect(self, image, prompt, box_threshold, text_threshold):
        payload = self._post(
            f"{self.detector_url}/detect",
            {"image": image.b64(), "prompt": prompt, "box_threshold": box_threshold, "text_threshold": text_threshold},
        )
        if not isinstance(payload, dict) or not isinstance(payload.get("detections"), list):
            raise ProviderError("detector response lacks a detections list")
        return [Detection.from_json(d) for d in payload["detections"]]

    def _depth(self, image, bbox):
        payload = self._post(f"{self.depth_url}/depth", {"image": image.b64(), "bbox": bbox.as_list()})
        if not isinstance(payload, dict) or "depth_m" not in payload:
            raise ProviderError("depth response lacks depth_m")
        return payload["depth_m"]

    def _vqa(self, image, bbox, question):
        return self.vqa_client.complete([user_message(vqa_view(image, bbox), question)], temperature=0)
