from __future__ import annotations

import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from visreason.seeding import rng, substream
from visreason.serialize import atomic_write_text, content_key, dumps, read_jsonl, write_json, write_jsonl


def test_substream_is_stable_and_separates_names():
    assert substream(7, "a", 1) == substream(7, "a", 1)
    assert substream(7, "a", 1) != substream(7, "a", 2)
    assert substream(7, "a") != substream(8, "a")
    assert 0 <= substream(7, "x") < 2**63


def test_rng_streams_reproduce():
    assert rng(3, "s").random(4).tolist() == rng(3, "s").random(4).tolist()


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip_is_bit_exact(x):
    assert json.loads(dumps(x)) == x
    assert math.copysign(1, json.loads(dumps(x))) == math.copysign(1, x)


def test_dumps_keeps_key_order_and_marks_floats():
    assert dumps({"b": 1, "a": 2.0, "c": [True, None, "é"]}) == '{"b":1,"a":2.0,"c":[true,null,"é"]}'


@pytest.mark.parametrize("bad", [math.nan, math.inf, {1: 2}, object()])
def test_dumps_rejects_non_json(bad):
    with pytest.raises((ValueError, TypeError)):
        dumps(bad)


def test_content_key_ignores_key_order():
    assert content_key({"a": 1, "b": 2}) == content_key({"b": 2, "a": 1})
    assert content_key({"a": 1}) != content_key({"a": 2})


def test_atomic_writes(tmp_path):
    path = tmp_path / "sub" / "out.json"
    write_json(path, {"x": 1})
    assert path.read_text() == '{"x":1}\n'
    write_jsonl(tmp_path / "r.jsonl", [{"a": 1}, {"a": 2}])
    assert read_jsonl(tmp_path / "r.jsonl") == [{"a": 1}, {"a": 2}]
    atomic_write_text(path, "over")
    assert path.read_text() == "over"
    assert [p.name for p in path.parent.iterdir()] == ["out.json"]
