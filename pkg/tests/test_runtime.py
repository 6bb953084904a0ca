from __future__ import annotations

import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN_IMAGES
from visreason.runtime import (
    COMPLETED,
    ERROR,
    HALTED,
    Budget,
    MissingAnswer,
    ToolBridge,
    collect_grounding_calls,
    dry_run,
    dummy_bridge,
    execute,
    extract_final_answer,
)
from visreason.toolprog import GOLDEN_PROGRAMS, parse_program
from visreason.toolprog.corpus import SOFA_TABLE_HEIGHT


def run(src: str, budget: Budget = Budget(), tools: ToolBridge | None = None):
    return execute(parse_program(src), tools, budget)


def error_kind(src: str, budget: Budget = Budget()) -> str:
    result = run(src, budget)
    assert result.status == ERROR
    return result.error.kind


class TestBudget:
    @pytest.mark.parametrize("field", ["max_steps", "max_tool_calls", "max_wall", "max_call_depth"])
    def test_strictly_positive(self, field):
        with pytest.raises(ValueError):
            Budget(**{field: 0})

    def test_defaults(self):
        b = Budget()
        assert (b.max_steps, b.max_tool_calls, b.max_wall) == (100_000, 64, 120.0)


class TestExecute:
    def test_single_assignment(self):
        result = run("final_answer = 1")
        assert result.status == COMPLETED
        assert result.bindings["final_answer"] == 1.0
        assert isinstance(result.bindings["final_answer"], float)

    def test_step_budget(self):
        result = run("while True:\n    x = 1", Budget(max_steps=1000))
        assert result.status == ERROR
        assert (result.error.kind, result.error.detail) == ("budget_exceeded", "steps")
        assert result.steps_used <= 1000

    def test_top_level_return_halts(self):
        result = run("final_answer = 1\nreturn\nfinal_answer = 2")
        assert result.status == HALTED
        assert result.bindings["final_answer"] == 1.0

    def test_integer_builtins_give_whole_floats(self):
        result = run('a = len([1, 2])\nb = int("7")\nc = round(2.5)\nd = int(3.9)')
        assert [result.bindings[k] for k in "abcd"] == [2.0, 7.0, 2.0, 3.0]
        assert all(isinstance(result.bindings[k], float) for k in "abcd")

    def test_max_with_key_and_local_function(self):
        src = (
            "def area(d):\n    b = d['bbox']\n    return (b[2] - b[0]) * (b[3] - b[1])\n"
            "ds = [{'bbox': [0, 0, 1, 1]}, {'bbox': [0, 0, 3, 3]}]\n"
            "final_answer = max(ds, key=area)['bbox'][2]"
        )
        assert run(src).bindings["final_answer"] == 3.0

    def test_builtins(self):
        src = (
            "a = sum([1, 2, 3])\nb = sorted([3, 1, 2])\nc = abs(-2)\nd = min(4, 2, 9)\n"
            "e = str(2.0)\nf = float('0.5')\nh = range(3)\nk = enumerate(['a'])"
        )
        out = run(src).bindings
        assert (out["a"], out["b"], out["c"], out["d"], out["e"], out["f"]) == (6.0, [1.0, 2.0, 3.0], 2.0, 2.0, "2", 0.5)
        assert out["h"] == [0.0, 1.0, 2.0]
        assert out["k"] == [[0.0, "a"]]

    def test_string_methods_and_membership(self):
        src = "s = ' Blue Shirt '.strip().lower()\nfinal_answer = 'lu' in s and s.split() == ['blue', 'shirt']"
        assert run(src).bindings["final_answer"] is True

    def test_break_and_continue(self):
        src = "n = 0\nfor x in [1, 2, 3, 4]:\n    if x == 1:\n        continue\n    if x == 3:\n        break\n    n += x"
        assert run(src).bindings["n"] == 2.0

    def test_closure_sees_later_globals(self):
        src = "def f():\n    return k * 2\nk = 4\nfinal_answer = f()"
        assert run(src).bindings["final_answer"] == 8.0

    def test_float_semantics_are_exact(self):
        assert run("final_answer = 0.1 + 0.2 == 0.3").bindings["final_answer"] is False

    @pytest.mark.parametrize(
        "src, kind",
        [
            ("final_answer = undefined_var + 1", "undefined_name"),
            ("x = 1/0", "division_by_zero"),
            ("x = 5 % 0", "division_by_zero"),
            ("x = [1][3]", "index_out_of_range"),
            ("x = {'a': 1}['b']", "key_error"),
            ("x = 'a' + 1", "type_mismatch"),
            ("if 1:\n    x = 2", "type_mismatch"),
            ("while [1]:\n    x = 2", "type_mismatch"),
            ("x = not 1", "type_mismatch"),
            ("x = 1 and True", "type_mismatch"),
            ("x = {[1]: 2}", "type_mismatch"),
            ("x = [1][0.5]", "type_mismatch"),
            ("x = 10.0 ** 400", "overflow"),
            ("x = int('abc')", "value_error"),
            ("x = min([])", "value_error"),
            ("x = gd_detect(img_pth, 'cup')", "undefined_name"),
            ("def f():\n    return f()\nx = f()", "budget_exceeded"),
        ],
    )
    def test_runtime_errors(self, src, kind):
        assert error_kind(src) == kind

    def test_tool_without_provider(self):
        assert error_kind("x = gd_detect('a', 'cup')") == "tool_error"

    def test_tool_call_budget(self):
        result = execute(
            parse_program("for i in range(10):\n    d = depth(img_pth, [0, 0, 5, 5])"),
            dummy_bridge(),
            Budget(max_tool_calls=3),
        )
        assert (result.error.kind, result.error.detail) == ("budget_exceeded", "tool_calls")
        assert len(result.trace) == result.tool_calls_used == 3

    def test_trace_records_tool_calls(self):
        result = execute(parse_program("d = gd_detect(img_pth, 'cup, plate')\nz = depth(img_pth, d[0]['bbox'])"), dummy_bridge())
        assert [c.tool for c in result.trace] == ["gd_detect", "depth"]
        assert len(result.trace) == result.tool_calls_used
        assert result.trace[0].args == {"image": "img_pth", "prompt": "cup, plate"}
        assert [d["label"] for d in result.trace[0].result] == ["cup", "plate"]

    def test_out_of_bounds_tool_box_is_tool_error(self, scenes, resolver):
        ref = "living_room.png"
        bridge = ToolBridge(scenes, {ref: resolver.resolve(ref)})
        result = execute(parse_program("d = depth(img_pth, [0, 0, 5000, 5])"), bridge)
        assert result.error.kind == "tool_error"

    def test_result_json_shape(self):
        out = run("final_answer = [1, 'a', None]").to_json()
        assert list(out) == ["status", "bindings", "trace", "steps_used", "tool_calls_used", "error"]
        assert out["bindings"]["final_answer"] == [1.0, "a", None]


class TestGolden:
    @pytest.mark.parametrize("golden", GOLDEN_PROGRAMS, ids=lambda g: g.name)
    def test_deterministic_on_mock(self, golden, run_on_scene):
        ref = GOLDEN_IMAGES[golden.name]
        first, second = run_on_scene(golden.code, ref), run_on_scene(golden.code, ref)
        assert first.ok
        assert (first.status, first.bindings, first.trace) == (second.status, second.bindings, second.trace)

    def test_expected_answers(self, run_on_scene):
        answers = {g.name: extract_final_answer(run_on_scene(g.code, GOLDEN_IMAGES[g.name])) for g in GOLDEN_PROGRAMS}
        # Q1: pseudo-heights 100*2 and 60*3, so 180 * 0.5 / 200
        assert answers["sofa_table_height"] == pytest.approx(0.45, abs=1e-12)
        # Q2: tv at depth 4 and sofa at 2.5 so the sofa is closer
        assert answers["tv_sofa_closer"] == "sofa"
        # Q3: 4 placemats / 2 plants
        assert answers["placemat_plant_ratio"] == 2.0
        # Q4: washer depth 3 against the chair at depth 2 nearer the centre line
        assert answers["washer_chair_closer"] == "washing machine"
        # Q5: two of three persons answer yes to the shirt question
        assert answers["blue_shirt_count"] == 2.0


class TestFinalAnswer:
    def test_text_answer(self):
        assert extract_final_answer(run('final_answer = "tv"')) == "tv"

    def test_wrong_name(self):
        with pytest.raises(MissingAnswer):
            extract_final_answer(run("answer = 3"))

    def test_callable_is_missing(self):
        with pytest.raises(MissingAnswer):
            extract_final_answer(run("def final_answer():\n    return 1"))

    def test_error_status_is_missing(self):
        with pytest.raises(MissingAnswer):
            extract_final_answer(run("final_answer = 1\nx = 1/0"))


class TestDryRun:
    @pytest.mark.parametrize("golden", GOLDEN_PROGRAMS, ids=lambda g: g.name)
    def test_golden_pass(self, golden):
        assert dry_run(parse_program(golden.code))

    def test_undefined_name(self):
        r = dry_run(parse_program("final_answer = undefined_var + 1"))
        assert not r and r.reason == "undefined_name"

    def test_division_by_zero(self):
        r = dry_run(parse_program("x = 1/0"))
        assert not r and r.reason == "division_by_zero"

    def test_dummy_labels_echo_prompt(self):
        result = execute(parse_program("d = gd_detect(img_pth, 'tv')"), dummy_bridge())
        assert [x["label"] for x in result.bindings["d"]] == ["tv", "tv"]


programs = st.sampled_from(
    [
        "x = 1",
        "x = 1/0",
        "final_answer = y",
        "d = gd_detect(img_pth, 'a, b')\nfinal_answer = len(d)",
        "for i in range(5):\n    x = i\nfinal_answer = x",
        "final_answer = vqa(img_pth, None, 'q') == 'yes'",
        "if 1:\n    x = 2",
        "x = depth(img_pth, [0, 0, 1, 1]) / 0",
    ]
)


@settings(max_examples=50)
@given(programs)
def test_dry_run_matches_dummy_execution(src):
    prog = parse_program(src)
    result = execute(prog, dummy_bridge(), Budget())
    assert bool(dry_run(prog)) == (result.error is None)


class TestGroundingCalls:
    def test_question_one(self):
        calls = collect_grounding_calls(parse_program(SOFA_TABLE_HEIGHT.code))
        assert calls.prompts == ["two-seat sofa, dining table"]
        assert calls.dynamic == 0

    def test_none(self):
        assert collect_grounding_calls(parse_program("x = 1")).prompts == []

    def test_dynamic(self):
        calls = collect_grounding_calls(parse_program("p = 'cup'\nd = gd_detect(img_pth, p)"))
        assert (calls.prompts, calls.dynamic) == ([], 1)

    def test_source_order(self):
        src = "a = gd_detect(img_pth, 'x')\nif True:\n    b = gd_detect(img_pth, 'y')\nc = gd_detect(img_pth, 'z')"
        assert collect_grounding_calls(parse_program(src)).prompts == ["x", "y", "z"]


def test_infinite_loop_terminates_fast():
    t0 = time.perf_counter()
    result = run("while True:\n    x = 1", Budget(max_steps=100_000))
    assert result.error.kind == "budget_exceeded"
    assert time.perf_counter() - t0 < 1.0
