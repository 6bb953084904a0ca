"""Six-head binary reward: format and syntax gates plus four verifier heads."""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from visreason import prompts
from visreason.runtime import Budget, dry_run
from visreason.toolprog import FormatError, ProgramSyntaxError, parse_llm_output, parse_program, static_check
from visreason.tools.chat import ChatClient, call_with_retries
from visreason.tools.types import ProviderError

HEADS = ("fmt", "sn", "log", "att", "sp", "ad")
VERIFIER_HEADS = {"logic": "log", "attribute": "att", "spatial": "sp", "adherence": "ad"}
_TEMPLATES = {"logic": "logic", "attribute": "attribute", "spatial": "spatial", "adherence": "code"}
REASK = "Your reply did not contain a valid score. Reply with only <answer>0</answer> or <answer>1</answer>."
FLAG_UNAVAILABLE = "verifier_unavailable"
FLAG_UNPARSEABLE = "verifier_unparseable"


class InvalidWeights(ValueError):
    pass


class Unparseable(ValueError):
    pass


@dataclass(frozen=True)
class RewardWeights:
    sn: float = 0.1
    log: float = 0.3
    att: float = 0.2
    sp: float = 0.2
    ad: float = 0.2

    def __post_init__(self) -> None:
        values = self.as_tuple()
        for name, v in zip(HEADS[1:], values):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise InvalidWeights(f"weight {name} must be a nonnegative finite number, got {v!r}")
        if abs(math.fsum(values) - 1.0) > 1e-12:
            raise InvalidWeights(f"weights must sum to 1.0, got {math.fsum(values)!r}")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.sn, self.log, self.att, self.sp, self.ad)

    @classmethod
    def from_mapping(cls, m: Mapping[str, Any]) -> "RewardWeights":
        unknown = set(m) - set(HEADS[1:])
        if unknown:
            raise InvalidWeights(f"unknown weight names {sorted(unknown)}")
        return cls(**{k: m[k] for k in HEADS[1:] if k in m})


def _bit(name: str, v: Any) -> int:
    if isinstance(v, bool) or v not in (0, 1):
        raise ValueError(f"head {name} must be 0 or 1, got {v!r}")
    return int(v)


def aggregate_reward(bits: Mapping[str, int], weights: RewardWeights = RewardWeights()) -> float:
    """fmt * (w_sn*sn + w_log*log + w_att*att + w_sp*sp + w_ad*ad)."""
    b = {h: _bit(h, bits[h]) for h in HEADS}
    return b["fmt"] * (
        weights.sn * b["sn"] + weights.log * b["log"] + weights.att * b["att"] + weights.sp * b["sp"] + weights.ad * b["ad"]
    )


def format_reward(raw: str) -> int:
    try:
        parse_llm_output(raw)
    except FormatError:
        return 0
    return 1


@dataclass(frozen=True)
class SyntaxOutcome:
    ok: bool
    reason: Optional[str] = None
    diagnostics: tuple = ()


def syntax_check(code: str, budget: Budget = Budget()) -> SyntaxOutcome:
    """Parse then dry-run; static diagnostics are reported but do not gate."""
    try:
        program = parse_program(code)
    except ProgramSyntaxError as exc:
        return SyntaxOutcome(False, f"{type(exc).__name__}: {exc}")
    diagnostics = tuple(d.to_json() for d in static_check(program))
    result = dry_run(program, budget)
    if not result.passed:
        assert result.error is not None
        return SyntaxOutcome(False, f"{result.error.kind}: {result.error.message}", diagnostics)
    return SyntaxOutcome(True, None, diagnostics)


def syntax_reward(code: str, budget: Budget = Budget()) -> int:
    return int(syntax_check(code, budget).ok)


_ANSWER_SPAN = re.compile(r"<answer>((?:(?!<answer>).)*?)</answer>", re.DOTALL)


def parse_verifier_verdict(reply: str) -> int:
    """The last well-formed ``<answer>…</answer>`` span, trimmed, must be "0" or "1"."""
    spans = _ANSWER_SPAN.findall(reply)
    if not spans:
        raise Unparseable("no <answer> span")
    verdict = spans[-1].strip()
    if verdict not in ("0", "1"):
        raise Unparseable(f"answer span holds {verdict[:40]!r}")
    return int(verdict)


@dataclass
class HeadOutcome:
    value: int
    replies: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


@dataclass
class VerifierClient:
    """A chat client plus the sampling and retry policy used for verdicts."""

    chat: ChatClient
    params: dict[str, Any] = field(default_factory=lambda: {"temperature": 0})
    max_attempts: int = 3
    backoff: float = 0.0

    def ask(self, messages: list) -> str:
        return call_with_retries(lambda: self.chat.complete(messages, **self.params), self.max_attempts, self.backoff)

    def binary_verdict(self, prompt: str) -> HeadOutcome:
        """Fail-closed: unavailable or twice-unparseable replies yield 0 with a flag."""
        messages: list = [{"role": "user", "content": prompt}]
        out = HeadOutcome(0)
        for attempt in range(2):
            try:
                reply = self.ask(messages)
            except ProviderError:
                out.flags.append(FLAG_UNAVAILABLE)
                return out
            out.replies.append(reply)
            try:
                out.value = parse_verifier_verdict(reply)
                return out
            except Unparseable:
                messages = messages + [{"role": "assistant", "content": reply}, {"role": "user", "content": REASK}]
        out.flags.append(FLAG_UNPARSEABLE)
        return out


def verifier_prompt(head: str, query: str, plan: str, code: str, api_doc: str, prompt_dir=None) -> str:
    if head not in VERIFIER_HEADS:
        raise ValueError(f"unknown verifier head {head!r}")
    template = _TEMPLATES[head]
    if head == "adherence":
        return prompts.render(template, prompt_dir, plan=plan, code=code, api=api_doc)
    return prompts.render(template, prompt_dir, query=query, plan=plan, api=api_doc)


def verifier_reward(
    head: str, query: str, plan: str, code: str, api_doc: str, client: VerifierClient, prompt_dir=None
) -> HeadOutcome:
    return client.binary_verdict(verifier_prompt(head, query, plan, code, api_doc, prompt_dir))


@dataclass
class RewardVector:
    fmt: int
    sn: int
    log: int
    att: int
    sp: int
    ad: int
    total: float
    transcripts: dict[str, list[str]] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    diagnostics: list[dict] = field(default_factory=list)

    def bits(self) -> dict[str, int]:
        return {h: getattr(self, h) for h in HEADS}

    def to_json(self) -> dict[str, Any]:
        return {**self.bits(), "total": self.total}

    @classmethod
    def zero(cls, flags: list[str] | None = None) -> "RewardVector":
        return cls(0, 0, 0, 0, 0, 0, 0.0, flags=list(flags or []))


@dataclass
class RewardModel:
    """Scores raw policy outputs. The four verifier heads run concurrently."""

    client: VerifierClient
    api_doc: str
    budget: Budget = field(default_factory=Budget)
    weights: RewardWeights = field(default_factory=RewardWeights)
    prompt_dir: Any = None
    max_workers: int = 4

    def score(self, query: str, raw: str) -> RewardVector:
        try:
            pc = parse_llm_output(raw)
        except FormatError as exc:
            return RewardVector.zero([f"format:{exc.kind}"])
        syntax = syntax_check(pc.code, self.budget)
        heads = list(VERIFIER_HEADS)
        if self.max_workers > 1:
            with ThreadPoolExecutor(max_workers=min(self.max_workers, len(heads))) as pool:
                outcomes = list(
                    pool.map(
                        lambda h: verifier_reward(h, query, pc.plan, pc.code, self.api_doc, self.client, self.prompt_dir),
                        heads,
                    )
                )
        else:
            outcomes = [
                verifier_reward(h, query, pc.plan, pc.code, self.api_doc, self.client, self.prompt_dir) for h in heads
            ]
        bits = {"fmt": 1, "sn": int(syntax.ok)}
        flags: list[str] = [] if syntax.ok else [f"syntax:{syntax.reason}"]
        transcripts: dict[str, list[str]] = {}
        for head, outcome in zip(heads, outcomes):
            bits[VERIFIER_HEADS[head]] = outcome.value
            transcripts[head] = outcome.replies
            for flag in outcome.flags:
                if flag not in flags:
                    flags.append(flag)
        total = aggregate_reward(bits, self.weights)
        return RewardVector(
            **bits, total=total, transcripts=transcripts, flags=flags, diagnostics=list(syntax.diagnostics)
        )


def score_rollout(
    query: str,
    raw: str,
    api_doc: str,
    client: VerifierClient,
    budget: Budget = Budget(),
    weights: RewardWeights = RewardWeights(),
) -> RewardVector:
    return RewardModel(client, api_doc, budget, weights).score(query, raw)
