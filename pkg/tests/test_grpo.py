from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import GOLDEN_IMAGES
from visreason.engine import Engine
from visreason.grpo import (
    FLAG_EXCLUDED,
    GroupTooSmall,
    GrpoConfig,
    GrpoGroup,
    PolicyUnavailable,
    QueryItem,
    RolloutRecord,
    SequenceLogProbs,
    SizeMismatch,
    build_rollout_batch,
    clipped_objective,
    group_advantages,
    grpo_group_loss,
    importance_ratio,
    importance_ratio_flagged,
    kl_penalty,
    write_rollouts,
)
from visreason.grpo.objective import grpo_group_loss_flagged, kl_penalty_flagged
from visreason.reward import FLAG_UNAVAILABLE, RewardModel, VerifierClient
from visreason.seeding import substream
from visreason.toolprog import GOLDEN_PROGRAMS
from visreason.tools import ProviderError, ScriptedChatClient
from visreason.tools.chat import ChatClient

finite = st.floats(min_value=-50, max_value=50, allow_nan=False)


def lp(new: float, old: float = 0.0, ref: float = 0.0) -> SequenceLogProbs:
    return SequenceLogProbs(new, old, ref)


def oracle_loss(rewards: list[float], triples: list[tuple[float, float, float]], eps: float, beta: float) -> float:
    # straight-line evaluation: plain float mean, direct exponentials, explicit two-branch min
    g = len(rewards)
    mean = sum(rewards) / g
    acc = 0.0
    for r, (new, old, ref) in zip(rewards, triples):
        a = r - mean
        s = math.exp(new - old)
        lo, hi = 1 - eps, 1 + eps
        c = lo if s < lo else hi if s > hi else s
        surrogate = s * a if s * a < c * a else c * a
        d = ref - new
        acc += surrogate - beta * (math.exp(d) - d - 1)
    return acc / g


class TestConfig:
    def test_defaults(self):
        assert (GrpoConfig().epsilon, GrpoConfig().beta, GrpoConfig().group_size) == (0.2, 0.01, 5)

    @pytest.mark.parametrize("kw", [{"epsilon": 0}, {"epsilon": 1}, {"beta": -0.1}, {"group_size": 1}, {"beta": math.inf}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            GrpoConfig(**kw)

    def test_logprobs_finite(self):
        with pytest.raises(ValueError):
            SequenceLogProbs(math.nan, 0, 0)


class TestAdvantages:
    def test_example(self):
        assert group_advantages([1.0, 0.5, 0.5, 0.0, 0.5]) == [0.5, 0.0, 0.0, -0.5, 0.0]

    def test_all_equal(self):
        assert group_advantages([0.7] * 5) == [0.0] * 5

    def test_too_small(self):
        with pytest.raises(GroupTooSmall):
            group_advantages([1.0])

    def test_non_finite(self):
        with pytest.raises(ValueError):
            group_advantages([1.0, math.inf])

    def test_zero_sum_random(self):
        rnd = random.Random(0)
        for _ in range(1000):
            adv = group_advantages([rnd.random() for _ in range(5)])
            assert abs(math.fsum(adv)) <= 1e-9

    @given(st.lists(st.integers(0, 64), min_size=2, max_size=8), st.integers(-64, 64))
    def test_shift_invariance_exact(self, ks, c):
        rewards = [k / 64 for k in ks]
        assert group_advantages([r + c / 64 for r in rewards]) == group_advantages(rewards)

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=8), st.sampled_from([0.25, 0.5, 2.0, 8.0]))
    def test_scale_covariance(self, rewards, s):
        assert group_advantages([s * r for r in rewards]) == [s * a for a in group_advantages(rewards)]


class TestRatio:
    def test_examples(self):
        assert importance_ratio(lp(-3.0, -3.0)) == 1.0
        assert importance_ratio(lp(math.log(1.5))) == pytest.approx(1.5, rel=1e-15)
        assert importance_ratio(lp(-math.log(2))) == pytest.approx(0.5, rel=1e-15)

    def test_overflow_clamped_and_flagged(self):
        s, flagged = importance_ratio_flagged(lp(800.0))
        assert flagged and math.isfinite(s) and s == math.exp(700)
        s, flagged = importance_ratio_flagged(lp(-800.0))
        assert flagged and s > 0

    @given(finite, finite)
    def test_positive(self, a, b):
        assert importance_ratio(lp(a, b)) > 0


class TestClipped:
    def test_examples(self):
        assert clipped_objective(1.5, 1.0, 0.2) == pytest.approx(1.2)
        # min(0.5 * -1, 0.8 * -1) takes the clipped branch
        assert clipped_objective(0.5, -1.0, 0.2) == pytest.approx(-0.8)

    def test_band_identity(self):
        for k in range(41):
            s = round(0.8 + 0.01 * k, 2)
            for a in (1.0, -1.0, 0.37, -2.5):
                assert clipped_objective(s, a, 0.2) == s * a

    def test_non_positive_ratio(self):
        with pytest.raises(ValueError):
            clipped_objective(0.0, 1.0, 0.2)

    @given(st.floats(1e-6, 10), st.floats(-5, 5), st.floats(0.01, 0.99))
    def test_pessimistic_bound(self, s, a, eps):
        assert clipped_objective(s, a, eps) <= s * a


class TestKl:
    def test_examples(self):
        assert kl_penalty(lp(-1.0, ref=-1.0)) == 0.0
        assert kl_penalty(lp(0.0, ref=1.0)) == pytest.approx(math.e - 2, rel=1e-14)
        assert kl_penalty(lp(1.0, ref=0.0)) == pytest.approx(1 / math.e, rel=1e-14)

    @given(finite, finite)
    def test_nonnegative_and_zero_iff_equal(self, new, ref):
        k = kl_penalty(lp(new, ref=ref))
        assert k >= 0
        assert (k == 0) == (new == ref)

    @given(st.floats(-2, 2).filter(lambda d: abs(d) > 1e-150))
    def test_accuracy_against_exact_series(self, d):
        # exact rational partial sum; terms past n=40 are below 1e-30 relative on this range
        x, term, acc = Fraction(d), Fraction(1), Fraction(0)
        for n in range(1, 40):
            term = term * x / n
            if n >= 2:
                acc += term
        assert abs(kl_penalty(lp(0.0, ref=d)) - float(acc)) <= 1e-14 * float(acc)

    def test_underflow_stays_positive(self):
        assert kl_penalty(lp(0.0, ref=1e-200)) == math.ulp(0.0)

    def test_overflow(self):
        k, flagged = kl_penalty_flagged(lp(0.0, ref=900.0))
        assert flagged and math.isfinite(k)


class TestGroupLoss:
    def test_examples(self):
        same = [lp(-1.0, -1.0, -1.0)] * 2
        assert grpo_group_loss(group_advantages([1.0, 0.0]), same) == 0.0
        assert grpo_group_loss(group_advantages([0.3] * 4), [lp(-2.0, -2.0, -2.0)] * 4) == 0.0

    def test_beta_zero_is_mean_clipped(self):
        adv = [0.5, -0.5, 0.0]
        lps = [lp(0.3, 0.0, 1.0), lp(-0.1, 0.2, 0.0), lp(0.0, 0.0, -2.0)]
        expected = sum(clipped_objective(importance_ratio(x), a, 0.2) for a, x in zip(adv, lps)) / 3
        assert grpo_group_loss(adv, lps, GrpoConfig(beta=0.0)) == pytest.approx(expected, abs=1e-15)

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatch):
            grpo_group_loss([0.5, -0.5], [lp(0.0)])

    def test_matches_oracle(self):
        rnd = random.Random(1)
        for _ in range(1000):
            g = rnd.randint(2, 8)
            rewards = [rnd.random() for _ in range(g)]
            triples = [(rnd.uniform(-3, 0), rnd.uniform(-3, 0), rnd.uniform(-3, 0)) for _ in range(g)]
            eps, beta = rnd.uniform(0.05, 0.5), rnd.uniform(0, 0.1)
            got = grpo_group_loss(group_advantages(rewards), [SequenceLogProbs(*t) for t in triples], GrpoConfig(eps, beta, g))
            assert abs(got - oracle_loss(rewards, triples, eps, beta)) <= 1e-12

    def test_overflow_flag(self):
        out = grpo_group_loss_flagged([0.5, -0.5], [lp(800.0), lp(0.0)])
        assert out.overflow and math.isfinite(out.value)


# --- rollout batches ------------------------------------------------------------

G1 = GOLDEN_PROGRAMS[0]
OUTPUTS = [
    G1.raw_output(),
    "<plan>p</plan><answer>final_answer = 1/0</answer>",
    "no tags at all",
    "<plan>p</plan><answer>x = (1</answer>",
    G1.raw_output(),
]
QUERY = {"query_id": "q1", "query": G1.question, "image_ref": GOLDEN_IMAGES[G1.name]}


class SeededPolicy(ChatClient):
    """Returns the output assigned to the member whose sampling seed arrives."""

    deterministic = True

    def __init__(self, outputs: dict[str, list[str]], seed: int) -> None:
        self.name = "seeded"
        self.by_seed = {substream(seed, "policy", qid, i): out for qid, outs in outputs.items() for i, out in enumerate(outs)}
        self.calls = 0

    def complete(self, messages, **params):
        self.calls += 1
        reply = self.by_seed[params["seed"]]
        if isinstance(reply, BaseException):
            raise reply
        return reply


def make_engine(scenes, resolver, policy, verifier_reply="<answer>1</answer>") -> Engine:
    chat = ScriptedChatClient(responder=lambda m: verifier_reply if isinstance(verifier_reply, str) else verifier_reply(m))
    reward = RewardModel(VerifierClient(chat, max_attempts=1), "api")
    return Engine(policy=policy, tools=scenes, images=resolver, reward=reward, policy_attempts=1)


class TestBatch:
    def test_one_group(self, scenes, resolver, tmp_path):
        engine = make_engine(scenes, resolver, SeededPolicy({"q1": OUTPUTS}, 3))
        groups = build_rollout_batch([QUERY], engine, seed=3, out_path=tmp_path / "r.jsonl")
        assert len(groups) == 1
        g = groups[0]
        assert [m.member_index for m in g.members] == [0, 1, 2, 3, 4]
        assert g.rewards == pytest.approx([1.0, 0.9, 0.0, 0.9, 1.0], abs=1e-12)
        assert g.advantages == group_advantages(g.rewards)
        assert abs(math.fsum(g.advantages)) <= 1e-9
        assert g.members[0].answer == pytest.approx(0.45, abs=1e-12)
        assert g.members[2].flags == ["format:missing_plan"]
        assert "execution_error:division_by_zero" in g.members[1].flags
        rows = (tmp_path / "r.jsonl").read_text().splitlines()
        assert len(rows) == 5
        import json

        first = json.loads(rows[0])
        assert list(first) == list(RolloutRecord.FIELDS)
        assert list(first["reward"]) == ["fmt", "sn", "log", "att", "sp", "ad", "total"]
        assert RolloutRecord.from_json(first).to_json() == first

    def test_byte_identical_reruns(self, scenes, resolver, tmp_path):
        for name in ("a.jsonl", "b.jsonl"):
            engine = make_engine(scenes, resolver, SeededPolicy({"q1": OUTPUTS}, 9))
            build_rollout_batch([QUERY], engine, seed=9, out_path=tmp_path / name, max_workers=4)
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_all_malformed(self, scenes, resolver):
        engine = make_engine(scenes, resolver, SeededPolicy({"q1": ["junk"] * 5}, 0))
        g = build_rollout_batch([QUERY], engine, seed=0)[0]
        assert g.rewards == [0.0] * 5 and g.advantages == [0.0] * 5
        assert engine.reward.client.chat.call_count == 0

    def test_verifier_outage_excludes_group(self, scenes, resolver):
        engine = make_engine(scenes, resolver, SeededPolicy({"q1": OUTPUTS}, 0), verifier_reply=lambda m: ProviderError("x"))
        g = build_rollout_batch([QUERY], engine, seed=0)[0]
        assert g.excluded
        assert all(FLAG_EXCLUDED in m.flags for m in g.members if FLAG_UNAVAILABLE in m.flags)
        assert all(m.flags[-1] == FLAG_EXCLUDED for m in g.members)

    def test_partial_group_dropped(self, scenes, resolver):
        outs = {"q1": OUTPUTS, "q2": OUTPUTS[:2] + [ProviderError("timeout")] + OUTPUTS[3:]}
        q2 = {**QUERY, "query_id": "q2"}
        engine = make_engine(scenes, resolver, SeededPolicy(outs, 0))
        groups = build_rollout_batch([q2, QUERY], engine, seed=0)
        assert [g.query_id for g in groups] == ["q1"]

    def test_policy_unavailable(self, scenes, resolver):
        engine = make_engine(scenes, resolver, ScriptedChatClient(responder=lambda m: ProviderError("down")))
        with pytest.raises(PolicyUnavailable):
            build_rollout_batch([QUERY], engine, seed=0)

    def test_sorted_by_query_id(self, scenes, resolver):
        outs = {q: OUTPUTS for q in ("b", "a", "c")}
        engine = make_engine(scenes, resolver, SeededPolicy(outs, 0))
        groups = build_rollout_batch([{**QUERY, "query_id": q} for q in ("b", "a", "c")], engine, seed=0)
        assert [g.query_id for g in groups] == ["a", "b", "c"]

    def test_group_requires_two(self):
        with pytest.raises(ValueError):
            GrpoGroup("q", "g", [], [], [])

    def test_query_item_variants(self):
        assert QueryItem.from_json({"task_id": "t", "selected": "How many?", "image_ref": "x.png"}).query_id == "t"
        auto = QueryItem.from_json({"query": "How many?", "image_ref": "x.png"})
        assert auto.query_id == QueryItem.from_json({"query": "How many?", "image_ref": "x.png"}).query_id
        with pytest.raises(ValueError):
            QueryItem.from_json({"query": " ", "image_ref": "x.png"})

    def test_duplicate_ids_rejected(self, scenes, resolver):
        engine = make_engine(scenes, resolver, SeededPolicy({"q1": OUTPUTS}, 0))
        with pytest.raises(ValueError):
            build_rollout_batch([QUERY, QUERY], engine)

    def test_write_empty(self, tmp_path):
        write_rollouts(tmp_path / "e.jsonl", [])
        assert (tmp_path / "e.jsonl").read_text() == ""
