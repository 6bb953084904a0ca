"""Pseudo-label verification stages: over-predict, coarse filter, per-crop check, de-duplication."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from visreason import prompts
from visreason.geometry import area, iou, min_area_containment
from visreason.tools.chat import ChatClient, Message, call_with_retries, user_message
from visreason.tools.imaging import crop_and_upscale, detection_listing, render_overlay
from visreason.tools.providers import ToolProvider
from visreason.tools.types import Detection, ImageHandle, ProviderError

log = logging.getLogger(__name__)

FORGE_BOX_THRESHOLD = 0.2
FORGE_TEXT_THRESHOLD = 0.2
IOU_THRESHOLD = 0.9
CONTAINMENT_THRESHOLD = 0.9

LISTING_REASK = (
    "Your reply was not a valid verdict. Every index from 1 to {n} must appear exactly once, "
    "in either keep_indices or drop_indices. Return only the JSON object."
)
CROP_REASK = 'Your reply was not valid JSON. Return only {"keep": true} or {"keep": false} with a short "reason".'


class VerdictInvalid(ValueError):
    pass


@dataclass(frozen=True)
class KeepDropVerdict:
    """1-based keep/drop partition over a numbered detection listing."""

    keep_indices: tuple[int, ...]
    drop_indices: tuple[int, ...]
    notes: tuple[str, ...] = ()

    def check(self, n: int) -> None:
        everything = list(self.keep_indices) + list(self.drop_indices)
        if len(everything) != len(set(everything)):
            raise VerdictInvalid("an index appears more than once")
        if set(everything) != set(range(1, n + 1)):
            missing = sorted(set(range(1, n + 1)) - set(everything))
            extra = sorted(set(everything) - set(range(1, n + 1)))
            raise VerdictInvalid(f"indices do not partition 1..{n} (missing {missing}, out of range {extra})")

    def apply(self, detections: Sequence[Detection]) -> list[Detection]:
        self.check(len(detections))
        keep = set(self.keep_indices)
        return [d for i, d in enumerate(detections, start=1) if i in keep]


def _json_object(reply: str) -> dict[str, Any]:
    start, end = reply.find("{"), reply.rfind("}")
    if start < 0 or end < start:
        raise VerdictInvalid("reply holds no JSON object")
    try:
        obj = json.loads(reply[start : end + 1])
    except json.JSONDecodeError as exc:
        raise VerdictInvalid(f"reply JSON does not parse: {exc}") from None
    if not isinstance(obj, dict):
        raise VerdictInvalid("reply JSON is not an object")
    return obj


def _indices(obj: dict[str, Any], key: str) -> tuple[int, ...]:
    raw = obj.get(key)
    if not isinstance(raw, list):
        raise VerdictInvalid(f"{key} must be a list")
    out = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v != int(v):
            raise VerdictInvalid(f"{key} holds a non-integer {v!r}")
        out.append(int(v))
    return tuple(out)


def parse_keep_drop(reply: str, n: int) -> KeepDropVerdict:
    obj = _json_object(reply)
    notes = obj.get("notes", [])
    verdict = KeepDropVerdict(
        _indices(obj, "keep_indices"),
        _indices(obj, "drop_indices"),
        tuple(str(x) for x in notes) if isinstance(notes, list) else (str(notes),),
    )
    verdict.check(n)
    return verdict


def parse_keep(reply: str) -> bool:
    obj = _json_object(reply)
    keep = obj.get("keep")
    if not isinstance(keep, bool):
        raise VerdictInvalid("keep must be true or false")
    return keep


@dataclass
class StageResult:
    detections: list[Detection]
    flags: list[str] = field(default_factory=list)
    verdicts: list[KeepDropVerdict] = field(default_factory=list)
    replies: list[str] = field(default_factory=list)


def overpredict(
    image: ImageHandle,
    prompt: str,
    provider: ToolProvider,
    box_threshold: float = FORGE_BOX_THRESHOLD,
    text_threshold: float = FORGE_TEXT_THRESHOLD,
) -> list[Detection]:
    """Detection at lowered thresholds, trading precision for recall."""
    return provider.detect(image, prompt, box_threshold, text_threshold)


def _ask(client: ChatClient, messages: list[Message], attempts: int) -> str:
    return call_with_retries(lambda: client.complete(messages, temperature=0), attempts)


def listing_messages(template: str, image: ImageHandle, detections: Sequence[Detection], prompt_dir: Any = None) -> list[Message]:
    return [
        user_message(
            prompts.load(template, prompt_dir),
            "CLEAN image:",
            image,
            "ANNOTATED image:",
            render_overlay(image, detections),
            "Detections:\n" + detection_listing(detections),
        )
    ]


def _listing_stage(
    stage: str,
    template: str,
    image: ImageHandle,
    detections: Sequence[Detection],
    client: ChatClient,
    prompt_dir: Any,
    attempts: int,
) -> StageResult:
    """Shared keep/drop protocol. Failures keep every detection and raise a flag."""
    dets = list(detections)
    if not dets:
        return StageResult([])
    messages = listing_messages(template, image, dets, prompt_dir)
    result = StageResult(dets)
    for round_ in range(2):
        try:
            reply = _ask(client, messages, attempts)
        except ProviderError as exc:
            log.warning("%s: verifier unavailable, keeping all %d boxes: %s", stage, len(dets), exc)
            result.flags.append(f"{stage}:verifier_unavailable")
            return result
        result.replies.append(reply)
        try:
            verdict = parse_keep_drop(reply, len(dets))
        except VerdictInvalid as exc:
            log.info("%s: invalid verdict (round %d): %s", stage, round_ + 1, exc)
            messages = messages + [
                {"role": "assistant", "content": reply},
                {"role": "user", "content": LISTING_REASK.format(n=len(dets))},
            ]
            continue
        result.verdicts.append(verdict)
        result.detections = verdict.apply(dets)
        return result
    result.flags.append(f"{stage}:verdict_invalid")
    return result


def coarse_filter(
    image: ImageHandle, detections: Sequence[Detection], client: ChatClient, prompt_dir: Any = None, attempts: int = 3
) -> StageResult:
    return _listing_stage("coarse", "coarse", image, detections, client, prompt_dir, attempts)


def crop_messages(image: ImageHandle, det: Detection, prompt_dir: Any = None) -> list[Message]:
    return [user_message(prompts.load("per_crop", prompt_dir), crop_and_upscale(image, det.bbox), f"Label: {det.label}")]


def _verify_crop(image: ImageHandle, det: Detection, client: ChatClient, prompt_dir: Any, attempts: int) -> tuple[bool, Optional[str], list[str]]:
    messages = crop_messages(image, det, prompt_dir)
    replies: list[str] = []
    for _ in range(2):
        try:
            reply = _ask(client, messages, attempts)
        except ProviderError:
            return False, "crop:verifier_unavailable", replies
        replies.append(reply)
        try:
            return parse_keep(reply), None, replies
        except VerdictInvalid:
            messages = messages + [{"role": "assistant", "content": reply}, {"role": "user", "content": CROP_REASK}]
    return False, "crop:unparseable", replies


def per_crop_verify(
    image: ImageHandle,
    detections: Sequence[Detection],
    client: ChatClient,
    prompt_dir: Any = None,
    attempts: int = 3,
    max_workers: int = 4,
) -> StageResult:
    """One strict check per box; anything short of an explicit keep drops the box."""
    dets = list(detections)
    if not dets:
        return StageResult([])
    with ThreadPoolExecutor(max_workers=max(1, min(max_workers, len(dets)))) as pool:
        outcomes = list(pool.map(lambda d: _verify_crop(image, d, client, prompt_dir, attempts), dets))
    result = StageResult([d for d, (keep, _, _) in zip(dets, outcomes) if keep])
    for i, (_, flag, replies) in enumerate(outcomes, start=1):
        result.replies.extend(replies)
        if flag is not None:
            result.flags.append(f"{flag}@{i}")
    return result


@dataclass(frozen=True)
class DuplicateGroup:
    keeper: int
    members: tuple[int, ...]


def geometric_duplicates(
    detections: Sequence[Detection],
    iou_threshold: float = IOU_THRESHOLD,
    containment_threshold: float = CONTAINMENT_THRESHOLD,
) -> list[DuplicateGroup]:
    """Transitive same-label duplicate groups (0-based indices, size >= 2).

    The keeper is the largest box; ties go to the earlier index.
    """
    n = len(detections)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            a, b = detections[i], detections[j]
            if a.label != b.label:
                continue
            if iou(a.bbox, b.bbox) >= iou_threshold or min_area_containment(a.bbox, b.bbox) >= containment_threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    components: dict[int, list[int]] = {}
    for i in range(n):
        components.setdefault(find(i), []).append(i)
    groups = []
    for members in components.values():
        if len(members) < 2:
            continue
        keeper = min(members, key=lambda i: (-area(detections[i].bbox), i))
        groups.append(DuplicateGroup(keeper, tuple(members)))
    return sorted(groups, key=lambda g: g.members[0])


def drop_geometric_duplicates(
    detections: Sequence[Detection],
    iou_threshold: float = IOU_THRESHOLD,
    containment_threshold: float = CONTAINMENT_THRESHOLD,
) -> list[Detection]:
    dropped = {
        i
        for g in geometric_duplicates(detections, iou_threshold, containment_threshold)
        for i in g.members
        if i != g.keeper
    }
    return [d for i, d in enumerate(detections) if i not in dropped]


def deduplicate(
    image: ImageHandle,
    detections: Sequence[Detection],
    client: ChatClient,
    prompt_dir: Any = None,
    attempts: int = 3,
    iou_threshold: float = IOU_THRESHOLD,
    containment_threshold: float = CONTAINMENT_THRESHOLD,
) -> StageResult:
    """VLM final pass, then the geometric net over whatever it kept."""
    result = _listing_stage("dedup", "dedup", image, detections, client, prompt_dir, attempts)
    result.detections = drop_geometric_duplicates(result.detections, iou_threshold, containment_threshold)
    return result
