"""Crop/upscale and numbered-box overlays for the VLM verifiers."""

from __future__ import annotations

import math
from typing import Sequence

from PIL import Image, ImageDraw, ImageFont

from visreason.geometry import BBox
from visreason.tools.types import Detection, ImageHandle

DEFAULT_LONG_SIDE = 640

BOX_COLOR = (230, 25, 25)
TEXT_COLOR = (255, 255, 255)


def crop_pixels(image: ImageHandle, bbox: BBox) -> tuple[int, int, int, int]:
    image.check_box(bbox)
    left = int(math.floor(bbox.x1))
    top = int(math.floor(bbox.y1))
    right = min(image.width, int(math.ceil(bbox.x2)))
    bottom = min(image.height, int(math.ceil(bbox.y2)))
    return left, top, max(right, left + 1), max(bottom, top + 1)


def scaled_size(width: int, height: int, target_long_side: int) -> tuple[int, int]:
    """Output size for a crop; crops already at or above the target are left alone."""
    long_side = max(width, height)
    if long_side >= target_long_side:
        return width, height
    scale = target_long_side / long_side
    if width >= height:
        return target_long_side, max(1, round(height * scale))
    return max(1, round(width * scale)), target_long_side


def crop_and_upscale(image: ImageHandle, bbox: BBox, target_long_side: int = DEFAULT_LONG_SIDE) -> ImageHandle:
    box = crop_pixels(image, bbox)
    crop = image.to_pil().crop(box)
    size = scaled_size(crop.width, crop.height, target_long_side)
    if size != crop.size:
        crop = crop.resize(size, Image.Resampling.BICUBIC)
    return ImageHandle.from_pil(crop, ref=f"{image.ref}#crop{list(box)}")


def overlay_captions(detections: Sequence[Detection]) -> list[str]:
    return [f"{i} {d.label}" for i, d in enumerate(detections, start=1)]


def _font(size: int) -> ImageFont.ImageFont | ImageFont.FreeTypeFont:
    try:
        return ImageFont.load_default(size=size)
    except TypeError:  # Pillow < 10.1
        return ImageFont.load_default()


def render_overlay(image: ImageHandle, detections: Sequence[Detection]) -> ImageHandle:
    """Draw every box with its 1-based index and label anchored inside the top-left corner."""
    canvas = image.to_pil().copy()
    if not detections:
        return ImageHandle.from_pil(canvas, ref=f"{image.ref}#overlay")
    draw = ImageDraw.Draw(canvas)
    line = max(2, round(max(canvas.size) / 320))
    font = _font(max(10, round(max(canvas.size) / 40)))
    for caption, det in zip(overlay_captions(detections), detections):
        b = det.bbox
        x1, y1 = int(b.x1), int(b.y1)
        x2, y2 = int(math.ceil(b.x2)) - 1, int(math.ceil(b.y2)) - 1
        draw.rectangle([x1, y1, max(x1, x2), max(y1, y2)], outline=BOX_COLOR, width=line)
        tl, tt, tr, tb = draw.textbbox((x1 + line, y1 + line), caption, font=font)
        draw.rectangle([tl - 1, tt - 1, tr + 1, tb + 1], fill=BOX_COLOR)
        draw.text((x1 + line, y1 + line), caption, fill=TEXT_COLOR, font=font)
    return ImageHandle.from_pil(canvas, ref=f"{image.ref}#overlay")


def detection_listing(detections: Sequence[Detection]) -> str:
    """Numbered ``index, label, [x1,y1,x2,y2]`` lines matching the overlay numbering."""
    rows = []
    for i, det in enumerate(detections, start=1):
        coords = ",".join(_fmt_coord(c) for c in det.bbox.as_list())
        rows.append(f"{i}, {det.label}, [{coords}]")
    return "\n".join(rows)


def _fmt_coord(value: float) -> str:
    return str(int(value)) if value.is_integer() else f"{value:.1f}"
