"""End-to-end pseudo-label forge over (image, program) items."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence

from visreason.forge.stages import (
    CONTAINMENT_THRESHOLD,
    FORGE_BOX_THRESHOLD,
    FORGE_TEXT_THRESHOLD,
    IOU_THRESHOLD,
    KeepDropVerdict,
    coarse_filter,
    deduplicate,
    overpredict,
    per_crop_verify,
)
from visreason.runtime import collect_grounding_calls
from visreason.toolprog import ProgramSyntaxError, parse_program
from visreason.tools.chat import ChatClient
from visreason.tools.providers import ToolProvider
from visreason.tools.types import Detection, ImageHandle, ProviderError

log = logging.getLogger(__name__)

STAGES = ("overpredict", "coarse", "crop", "dedup")


@dataclass(frozen=True)
class PseudoLabel:
    image_id: str
    detection: Detection
    source: str = ""
    stage_history: tuple[str, ...] = STAGES

    def __post_init__(self) -> None:
        if tuple(self.stage_history) != STAGES[: len(self.stage_history)]:
            raise ValueError(f"stage_history {self.stage_history!r} is not a prefix of {STAGES!r}")
        object.__setattr__(self, "stage_history", tuple(self.stage_history))


@dataclass(frozen=True)
class ForgeItem:
    image_ref: str
    code: str
    source: str = ""


@dataclass
class ImageRun:
    """Per-image outcome: surviving labels plus the audit trail for the run manifest."""

    image_ref: str
    source: str
    labels: list[PseudoLabel] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    verdicts: list[KeepDropVerdict] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=dict)
    error: Optional[str] = None

    def manifest_row(self) -> dict[str, Any]:
        return {
            "image_ref": self.image_ref,
            "source": self.source,
            "counts": {s: self.counts.get(s, 0) for s in STAGES},
            "flags": list(self.flags),
            "timing": dict(self.timing),
            "error": self.error,
        }


@dataclass
class ForgeConfig:
    box_threshold: float = FORGE_BOX_THRESHOLD
    text_threshold: float = FORGE_TEXT_THRESHOLD
    iou_threshold: float = IOU_THRESHOLD
    containment_threshold: float = CONTAINMENT_THRESHOLD
    attempts: int = 3
    max_workers: int = 4
    prompt_dir: Any = None


def forge_image(
    item: ForgeItem,
    image: ImageHandle,
    provider: ToolProvider,
    vlm: ChatClient,
    cfg: ForgeConfig = ForgeConfig(),
) -> ImageRun:
    run = ImageRun(item.image_ref, item.source)
    clock = time.perf_counter()

    def lap(stage: str) -> None:
        nonlocal clock
        now = time.perf_counter()
        run.timing[stage] = round(now - clock, 6)
        clock = now

    try:
        calls = collect_grounding_calls(parse_program(item.code))
    except ProgramSyntaxError as exc:
        run.error = f"program does not parse: {exc}"
        return run
    if calls.dynamic:
        run.flags.append(f"dynamic_prompts:{calls.dynamic}")
    pooled: list[Detection] = []
    for prompt in calls.prompts:
        pooled.extend(overpredict(image, prompt, provider, cfg.box_threshold, cfg.text_threshold))
    run.counts["overpredict"] = len(pooled)
    lap("overpredict")
    if not pooled:
        return run

    coarse = coarse_filter(image, pooled, vlm, cfg.prompt_dir, cfg.attempts)
    run.counts["coarse"] = len(coarse.detections)
    run.flags += coarse.flags
    run.verdicts += coarse.verdicts
    lap("coarse")

    crop = per_crop_verify(image, coarse.detections, vlm, cfg.prompt_dir, cfg.attempts, cfg.max_workers)
    run.counts["crop"] = len(crop.detections)
    run.flags += crop.flags
    lap("crop")

    dedup = deduplicate(
        image, crop.detections, vlm, cfg.prompt_dir, cfg.attempts, cfg.iou_threshold, cfg.containment_threshold
    )
    run.counts["dedup"] = len(dedup.detections)
    run.flags += dedup.flags
    run.verdicts += dedup.verdicts
    lap("dedup")

    run.labels = [PseudoLabel(item.image_ref, d, item.source, STAGES) for d in dedup.detections]
    log.info(
        "forge %s: %s",
        item.image_ref,
        " -> ".join(str(run.counts.get(s, 0)) for s in STAGES),
    )
    return run


def run_pipeline(
    items: Iterable[ForgeItem],
    resolve: Callable[[str], ImageHandle],
    provider: ToolProvider,
    vlm: ChatClient,
    cfg: ForgeConfig = ForgeConfig(),
) -> list[ImageRun]:
    """Forge every item; one image failing never stops the others. Output keeps input order."""

    def one(item: ForgeItem) -> ImageRun:
        try:
            return forge_image(item, resolve(item.image_ref), provider, vlm, cfg)
        except (ProviderError, ValueError) as exc:
            log.warning("forge %s failed: %s", item.image_ref, exc)
            return ImageRun(item.image_ref, item.source, error=f"{type(exc).__name__}: {exc}")

    items = list(items)
    with ThreadPoolExecutor(max_workers=max(1, cfg.max_workers)) as pool:
        return list(pool.map(one, items))


def collect_labels(runs: Sequence[ImageRun]) -> list[PseudoLabel]:
    return [label for run in runs for label in run.labels]


def registered_images(runs: Sequence[ImageRun], resolve: Callable[[str], ImageHandle]) -> dict[str, tuple[int, int, str]]:
    out: dict[str, tuple[int, int, str]] = {}
    for run in runs:
        if run.error is None:
            image = resolve(run.image_ref)
            out[run.image_ref] = (image.width, image.height, run.source)
    return out


def manifest_rows(runs: Sequence[ImageRun]) -> list[Mapping[str, Any]]:
    return [run.manifest_row() for run in runs]
