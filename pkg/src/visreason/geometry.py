"""Bounding-box arithmetic shared by the interpreter, the label forge and evaluation.

Boxes are half-open real rectangles ``[x1, y1, x2, y2]`` in image pixel
coordinates with the origin at the top-left. No ``+1`` pixel-grid corrections
are applied anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence


class InvalidBox(ValueError):
    pass


class NonPositiveInput(ValueError):
    pass


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in coords):
            raise InvalidBox(f"box coordinates must be numbers: {coords!r}")
        if not all(math.isfinite(c) for c in coords):
            raise InvalidBox(f"box coordinates must be finite: {coords!r}")
        if min(coords) < 0:
            raise InvalidBox(f"box coordinates must be non-negative: {coords!r}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise InvalidBox(f"box must satisfy x1 < x2 and y1 < y2: {coords!r}")
        # normalize ints so equality and serialization are stable
        for name in ("x1", "y1", "x2", "y2"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_seq(cls, values: Sequence[float]) -> "BBox":
        if len(values) != 4:
            raise InvalidBox(f"box needs 4 coordinates, got {len(values)}")
        return cls(*values)

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    def within(self, width: float, height: float) -> bool:
        return self.x2 <= width and self.y2 <= height


def area(b: BBox) -> float:
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def intersection_area(a: BBox, b: BBox) -> float:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 for disjoint boxes."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    union = area(a) + area(b) - inter
    return min(1.0, inter / union)


def containment(inner: BBox, outer: BBox) -> float:
    """Fraction of ``inner``'s area covered by ``outer``."""
    return min(1.0, intersection_area(inner, outer) / area(inner))


def min_area_containment(a: BBox, b: BBox) -> float:
    """Containment of the smaller box inside the larger one."""
    inner, outer = (a, b) if area(a) <= area(b) else (b, a)
    return containment(inner, outer)


def center(b: BBox) -> tuple[float, float]:
    return ((b.x1 + b.x2) / 2, (b.y1 + b.y2) / 2)


def pseudo3d_extent(pixel_extent: float, depth_m: float) -> float:
    """Scale a 2D pixel measurement by depth.

    The result mixes units (pixels times meters) and is only meaningful
    relative to another pseudo-3D value.
    """
    if not pixel_extent > 0 or not depth_m > 0:
        raise NonPositiveInput(f"pseudo-3D inputs must be positive: {pixel_extent!r}, {depth_m!r}")
    return pixel_extent * depth_m


def union_box(boxes: Iterable[BBox]) -> BBox:
    boxes = list(boxes)
    return BBox(
        min(b.x1 for b in boxes),
        min(b.y1 for b in boxes),
        max(b.x2 for b in boxes),
        max(b.y2 for b in boxes),
    )
