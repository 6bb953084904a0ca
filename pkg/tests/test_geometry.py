from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from visreason.geometry import (
    BBox,
    InvalidBox,
    NonPositiveInput,
    area,
    center,
    containment,
    intersection_area,
    iou,
    min_area_containment,
    pseudo3d_extent,
    union_box,
)

coord = st.floats(min_value=0, max_value=1000, allow_nan=False)


@st.composite
def boxes(draw):
    x1, y1 = draw(coord), draw(coord)
    w = draw(st.floats(min_value=0.5, max_value=500))
    h = draw(st.floats(min_value=0.5, max_value=500))
    return BBox(x1, y1, x1 + w, y1 + h)


def brute_intersection(a: BBox, b: BBox) -> float:
    # independent closed form: clamp each axis overlap separately
    ox = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    oy = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    return ox * oy


class TestExamples:
    def test_area(self):
        assert area(BBox(0, 0, 10, 10)) == 100
        assert area(BBox(10, 20, 30, 60)) == 800
        assert area(BBox(5, 5, 6, 6)) > 0

    def test_iou(self):
        a = BBox(0, 0, 10, 10)
        assert iou(a, a) == 1.0
        assert iou(a, BBox(20, 20, 30, 30)) == 0.0
        assert iou(a, BBox(5, 0, 15, 10)) == pytest.approx(50 / 150, abs=1e-15)

    def test_touching_edges_do_not_intersect(self):
        assert intersection_area(BBox(0, 0, 10, 10), BBox(10, 0, 20, 10)) == 0.0

    def test_containment(self):
        outer = BBox(0, 0, 100, 100)
        assert containment(BBox(10, 10, 20, 20), outer) == 1.0
        assert containment(BBox(200, 200, 210, 210), outer) == 0.0
        assert containment(BBox(90, 0, 110, 10), outer) == pytest.approx(0.5)

    def test_min_area_containment_uses_smaller_box(self):
        small, big = BBox(10, 10, 20, 20), BBox(0, 0, 100, 100)
        assert min_area_containment(big, small) == min_area_containment(small, big) == 1.0

    def test_center(self):
        assert center(BBox(0, 0, 10, 10)) == (5, 5)
        assert center(BBox(0, 100, 50, 200)) == (25, 150)

    def test_pseudo3d(self):
        assert pseudo3d_extent(100, 2.0) == 200
        assert pseudo3d_extent(60, 3.0) == 180
        for bad in [(0, 1.0), (1.0, 0), (-1, 2.0), (1.0, math.nan)]:
            with pytest.raises(NonPositiveInput):
                pseudo3d_extent(*bad)

    def test_union_box(self):
        u = union_box([BBox(0, 5, 10, 10), BBox(3, 0, 20, 8)])
        assert u == BBox(0, 0, 20, 10)

    @pytest.mark.parametrize(
        "coords",
        [(5, 0, 5, 10), (0, 10, 10, 5), (-1, 0, 5, 5), (0, 0, math.inf, 5), (0, 0, math.nan, 5), (True, 0, 3, 3)],
    )
    def test_invalid_boxes(self, coords):
        with pytest.raises(InvalidBox):
            BBox(*coords)

    def test_from_seq_arity(self):
        with pytest.raises(InvalidBox):
            BBox.from_seq([0, 0, 1])
        assert BBox.from_seq([0, 0, 1, 1]).as_list() == [0.0, 0.0, 1.0, 1.0]


@given(boxes(), boxes())
def test_iou_symmetric_bounded_and_matches_oracle(a, b):
    value = iou(a, b)
    assert value == iou(b, a)
    assert 0.0 <= value <= 1.0
    inter = brute_intersection(a, b)
    union = area(a) + area(b) - inter
    assert value == pytest.approx(inter / union, rel=1e-9, abs=1e-12)
    assert value <= min(containment(a, b) * area(a), containment(b, a) * area(b)) / union + 1e-9


@given(boxes())
def test_self_iou_is_one(a):
    assert iou(a, a) == 1.0


@given(boxes(), boxes())
def test_containment_one_iff_subset(a, b):
    subset = b.x1 <= a.x1 and b.y1 <= a.y1 and a.x2 <= b.x2 and a.y2 <= b.y2
    if subset:
        assert containment(a, b) == 1.0
    if containment(a, b) >= 1 - 1e-9:
        # any overhang is at most a 1e-9 share of the inner box per axis
        sx, sy = 1e-8 * a.width, 1e-8 * a.height
        assert b.x1 - sx <= a.x1 and b.y1 - sy <= a.y1 and a.x2 <= b.x2 + sx and a.y2 <= b.y2 + sy


@given(boxes())
def test_shrunken_box_is_contained(b):
    inner = BBox(b.x1 + b.width / 4, b.y1 + b.height / 4, b.x2 - b.width / 4, b.y2 - b.height / 4)
    assert containment(inner, b) == 1.0


@given(boxes(), boxes())
def test_outputs_finite(a, b):
    for v in (area(a), iou(a, b), containment(a, b), min_area_containment(a, b), *center(a)):
        assert math.isfinite(v)


@given(boxes())
def test_center_inside_box(a):
    cx, cy = center(a)
    assert a.x1 <= cx <= a.x2 and a.y1 <= cy <= a.y2


@given(st.floats(min_value=1e-3, max_value=1e4), st.floats(min_value=1e-3, max_value=100), st.floats(min_value=0.1, max_value=10))
def test_pseudo3d_linear_in_depth(px, depth, k):
    assert pseudo3d_extent(px, depth * k) == pytest.approx(k * pseudo3d_extent(px, depth), rel=1e-12)
