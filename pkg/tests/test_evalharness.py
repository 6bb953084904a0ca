from __future__ import annotations

import json
import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import FIXTURES
from visreason.engine import Engine
from visreason.evalharness import (
    FLAG_FAILURE,
    MRA_THRESHOLDS,
    BenchmarkReport,
    TaskRecord,
    TaskScore,
    evaluate_benchmark,
    exact_match,
    exact_match_outcome,
    judge_equivalence,
    mra,
    normalize,
    score_answer,
)
from visreason.evalharness.scoring import FLAG_NO_OPTION, FLAG_UNPARSABLE, FLAG_ZERO_GOLD, float_outcome
from visreason.reward import VerifierClient
from visreason.serialize import read_jsonl
from visreason.tools import ProviderError, RuleChatClient, ScriptedChatClient

LITERAL_THRESHOLDS = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95]


def brute_mra(pred: float, gold: float) -> float:
    hits = 0
    for c in LITERAL_THRESHOLDS:
        if abs(pred - gold) / abs(gold) < 1 - c:
            hits += 1
    return hits / 10


class TestExactMatch:
    @pytest.mark.parametrize(
        "pred, gold, kind, score",
        [
            ("Yes", "yes", "yes_no", 1),
            (True, "yes", "yes_no", 1),
            ("no.", "yes", "yes_no", 0),
            (3.0, "3", "integer", 1),
            ("3", "3.0", "integer", 1),
            (2.0, "3", "integer", 0),
        ],
    )
    def test_examples(self, pred, gold, kind, score):
        assert exact_match(pred, gold, kind) == score

    def test_multiple_choice(self):
        assert exact_match("Sofa ", "sofa", "multiple_choice", ("tv", "sofa")) == 1
        assert exact_match("tv", "sofa", "multiple_choice", ("tv", "sofa")) == 0
        out = exact_match_outcome("couch", "sofa", "multiple_choice", ("tv", "sofa"))
        assert (out.score, out.flags) == (0, (FLAG_NO_OPTION,))

    @pytest.mark.parametrize("pred, kind", [("many", "integer"), ("maybe", "yes_no"), (None, "integer")])
    def test_unparsable(self, pred, kind):
        out = exact_match_outcome(pred, "1" if kind == "integer" else "yes", kind)
        assert (out.score, out.flags) == (0, (FLAG_UNPARSABLE,))

    def test_rejects_float_type(self):
        with pytest.raises(ValueError):
            exact_match("1", "1", "float")

    @given(st.sampled_from(["tv", "sofa", "Tv", " TV ", "sofa.", "chair"]), st.sampled_from(["tv", "sofa", "chair"]))
    def test_symmetric_under_normalization(self, pred, gold):
        options = ("tv", "sofa", "chair")
        assert (exact_match(pred, gold, "multiple_choice", options) == 1) == (normalize(pred) == normalize(gold))


class TestMra:
    def test_thresholds(self):
        assert list(MRA_THRESHOLDS) == LITERAL_THRESHOLDS

    def test_examples(self):
        assert mra(2.0, 2.0) == 1.0
        assert mra(3.0, 2.0) == 0.0
        assert mra(2.2, 2.0) == 0.8

    def test_brute_force_exact(self):
        rnd = random.Random(4)
        for _ in range(1000):
            gold = rnd.choice([-1, 1]) * 10 ** rnd.uniform(-3, 3)
            pred = gold * (1 + rnd.uniform(-0.7, 0.7))
            assert mra(pred, gold) == brute_mra(pred, gold)

    @given(st.floats(min_value=-1e6, max_value=1e6).filter(lambda x: x != 0))
    def test_identity(self, x):
        assert mra(x, x) == 1.0

    def test_monotone_chains(self):
        rnd = random.Random(8)
        for _ in range(100):
            gold = rnd.uniform(0.1, 100)
            errs = sorted(rnd.uniform(0, 1.2 * abs(gold)) for _ in range(20))
            values = [mra(gold + e, gold) for e in errs]
            assert all(a >= b for a, b in zip(values, values[1:]))

    def test_zero_gold_uses_absolute_error(self):
        assert mra(0.2, 0.0) == brute_absolute(0.2)
        out = float_outcome("0.2", "0")
        assert out.flags == (FLAG_ZERO_GOLD,)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            mra(math.nan, 1.0)

    def test_unparsable_float_prediction(self):
        out = float_outcome("about two", "2.0")
        assert (out.score, out.flags) == (0.0, (FLAG_UNPARSABLE,))


def brute_absolute(pred: float) -> float:
    return sum(1 for c in LITERAL_THRESHOLDS if abs(pred) < 1 - c) / 10


class TestJudge:
    def test_synonym(self):
        chat = ScriptedChatClient(replies=["<answer>1</answer>"])
        out = judge_equivalence("What is it?", "sofa", "couch", VerifierClient(chat))
        assert (out.score, out.judged) == (1, True)
        assert "sofa" in chat.requests[0][0][0]["content"] and "couch" in chat.requests[0][0][0]["content"]

    def test_fast_path(self):
        chat = ScriptedChatClient(replies=[])
        assert judge_equivalence("q", "Sofa", "sofa", VerifierClient(chat)).score == 1
        assert chat.call_count == 0

    def test_unreachable(self):
        chat = ScriptedChatClient(responder=lambda m: ProviderError("down"))
        out = judge_equivalence("q", "sofa", "couch", VerifierClient(chat))
        assert (out.score, out.flags) == (0, ["judge:verifier_unavailable"])

    def test_no_judge(self):
        assert score_answer(TaskRecord("t", "i", "q", "open_ended", "sofa"), "couch").flags == ("judge_unconfigured",)


class TestTaskRecord:
    @pytest.mark.parametrize(
        "kw",
        [
            {"answer_type": "essay"},
            {"gold": " "},
            {"answer_type": "float", "gold": "inf"},
            {"answer_type": "float", "gold": "two"},
            {"answer_type": "multiple_choice"},
            {"answer_type": "integer", "options": ("1", "2")},
        ],
    )
    def test_invalid(self, kw):
        base = {"task_id": "t", "image_ref": "i", "query": "q", "answer_type": "integer", "gold": "1"}
        with pytest.raises(ValueError):
            TaskRecord(**{**base, **kw})

    def test_fixture_rows_load(self):
        tasks = [TaskRecord.from_json(r) for r in read_jsonl(FIXTURES / "tasks.jsonl")]
        assert len(tasks) == 10


def fixture_engine(scenes, resolver) -> tuple[Engine, VerifierClient]:
    policy_rules = json.loads((FIXTURES / "policy_rules.json").read_text())
    judge_rules = json.loads((FIXTURES / "judge_rules.json").read_text())
    policy = RuleChatClient(policy_rules["rules"], policy_rules.get("default"), "fixture-policy")
    judge = VerifierClient(RuleChatClient(judge_rules["rules"], judge_rules.get("default"), "fixture-judge"))
    return Engine(policy=policy, tools=scenes, images=resolver), judge


class TestBenchmark:
    def test_fixture_report(self, scenes, resolver, tmp_path):
        engine, judge = fixture_engine(scenes, resolver)
        tasks = [TaskRecord.from_json(r) for r in read_jsonl(FIXTURES / "tasks.jsonl")]
        report = evaluate_benchmark(tasks, engine, tmp_path / "r.json", judge, tmp_path / "r.csv", seed=7)
        scores = {t.task_id: t.score for t in report.tasks}
        assert scores["t06"] == 0.0 and scores["t08"] == 1.0 and scores["t09"] == 0.0
        assert scores["t10"] == 0.9
        assert report.execution_failures == 1
        failed = [t for t in report.tasks if t.failed]
        assert [t.task_id for t in failed] == ["t09"] and FLAG_FAILURE in failed[0].flags
        assert abs(report.overall - sum(scores.values()) / 10) <= 1e-12
        assert [t.task_id for t in report.tasks] == [t.task_id for t in tasks]
        doc = json.loads((tmp_path / "r.json").read_text())
        assert list(doc) == ["n_tasks", "overall", "per_type", "execution_failures", "tasks"]
        assert (tmp_path / "r.csv").read_text().splitlines()[0] == "task_id,answer_type,gold,prediction,score,failed,flags"
        assert doc == json.loads((FIXTURES / "eval_report.json").read_text())

    def test_policy_outage_isolated(self, resolver, scenes):
        engine = Engine(policy=ScriptedChatClient(responder=lambda m: ProviderError("x")), tools=scenes, images=resolver, policy_attempts=1)
        report = evaluate_benchmark([TaskRecord("t", "tv_room.png", "q", "yes_no", "yes")], engine)
        assert report.tasks[0].flags == ["policy_unavailable", FLAG_FAILURE]

    def test_duplicate_ids(self, scenes, resolver):
        engine, _ = fixture_engine(scenes, resolver)
        t = TaskRecord("t", "tv_room.png", "q", "yes_no", "yes")
        with pytest.raises(ValueError):
            evaluate_benchmark([t, t], engine)

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=30))
    def test_overall_is_mean(self, scores):
        report = BenchmarkReport([TaskScore(str(i), "float", "1", None, s, False) for i, s in enumerate(scores)])
        assert abs(report.overall - sum(scores) / len(scores)) <= 1e-12
