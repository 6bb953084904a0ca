"""Answer scoring: exact match, mean relative accuracy, and judged equivalence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from visreason import prompts
from visreason.reward import VerifierClient
from visreason.runtime.values import to_text

ANSWER_TYPES = ("yes_no", "multiple_choice", "integer", "float", "open_ended")
EXACT_TYPES = ("yes_no", "multiple_choice", "integer")
MRA_THRESHOLDS: tuple[float, ...] = tuple(round(0.50 + 0.05 * k, 2) for k in range(10))

FLAG_UNPARSABLE = "unparsable_prediction"
FLAG_NO_OPTION = "no_matching_option"
FLAG_ZERO_GOLD = "zero_gold"

_YES_NO = {"yes": "yes", "true": "yes", "no": "no", "false": "no"}


@dataclass(frozen=True)
class TaskRecord:
    task_id: str
    image_ref: str
    query: str
    answer_type: str
    gold: str
    options: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", tuple(str(o) for o in self.options))
        if self.answer_type not in ANSWER_TYPES:
            raise ValueError(f"answer_type must be one of {ANSWER_TYPES}, got {self.answer_type!r}")
        if not str(self.gold).strip():
            raise ValueError(f"task {self.task_id}: gold answer is empty")
        if self.answer_type == "float":
            value = parse_number(self.gold)
            if value is None or not math.isfinite(value):
                raise ValueError(f"task {self.task_id}: float gold must be a finite number")
        if bool(self.options) != (self.answer_type == "multiple_choice"):
            raise ValueError(f"task {self.task_id}: options are required for and only for multiple_choice")

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "TaskRecord":
        return cls(
            str(obj["task_id"]),
            str(obj["image_ref"]),
            str(obj["query"]),
            str(obj["answer_type"]),
            str(obj["gold"]),
            tuple(obj.get("options") or ()),
        )


def normalize(value: Any) -> str:
    """Trim, case-fold, drop one trailing period; numbers print without a spurious ``.0``."""
    text = value if isinstance(value, str) else to_text(value)
    text = text.strip().casefold()
    if text.endswith(".") and parse_number(text) is None:
        text = text[:-1].rstrip()
    return text


def parse_number(value: Any) -> Optional[float]:
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        return None
    text = value.strip()
    if text.endswith("."):
        text = text[:-1]
    try:
        return float(text)
    except ValueError:
        return None


def _yes_no(value: Any) -> Optional[str]:
    if isinstance(value, bool):
        return "yes" if value else "no"
    return _YES_NO.get(normalize(value))


@dataclass(frozen=True)
class ScoreOutcome:
    score: float
    flags: tuple[str, ...] = ()


def exact_match_outcome(pred: Any, gold: str, answer_type: str, options: Sequence[str] = ()) -> ScoreOutcome:
    if answer_type == "yes_no":
        p, g = _yes_no(pred), _yes_no(gold)
        if p is None:
            return ScoreOutcome(0, (FLAG_UNPARSABLE,))
        return ScoreOutcome(int(p == (g if g is not None else normalize(gold))))
    if answer_type == "integer":
        p, g = parse_number(pred), parse_number(gold)
        if p is None or not math.isfinite(p):
            return ScoreOutcome(0, (FLAG_UNPARSABLE,))
        if g is None:
            raise ValueError(f"integer gold {gold!r} does not parse")
        return ScoreOutcome(int(p == g))
    if answer_type == "multiple_choice":
        p = normalize(pred)
        normalized = [normalize(o) for o in options]
        if p not in normalized:
            return ScoreOutcome(0, (FLAG_NO_OPTION,))
        return ScoreOutcome(int(p == normalize(gold)))
    raise ValueError(f"exact_match does not score {answer_type!r} answers")


def exact_match(pred: Any, gold: str, answer_type: str, options: Sequence[str] = ()) -> int:
    """1 iff prediction and gold agree after normalization; unparsable predictions score 0."""
    return int(exact_match_outcome(pred, gold, answer_type, options).score)


def mra(pred: float, gold: float, thresholds: Sequence[float] = MRA_THRESHOLDS) -> float:
    """Share of thresholds c with relative error strictly below 1 - c.

    Zero gold switches to absolute error.
    """
    if not math.isfinite(pred) or not math.isfinite(gold):
        raise ValueError("mra needs finite values")
    if not thresholds:
        raise ValueError("mra needs at least one threshold")
    err = abs(pred - gold) / abs(gold) if gold != 0 else abs(pred)
    return sum(1 for c in thresholds if err < 1 - c) / len(thresholds)


def float_outcome(pred: Any, gold: str) -> ScoreOutcome:
    p, g = parse_number(pred), parse_number(gold)
    if p is None or not math.isfinite(p):
        return ScoreOutcome(0.0, (FLAG_UNPARSABLE,))
    assert g is not None
    return ScoreOutcome(mra(p, g), (FLAG_ZERO_GOLD,) if g == 0 else ())


@dataclass
class JudgeOutcome:
    score: int
    judged: bool
    replies: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)


def judge_equivalence(question: str, gold: str, pred: Any, client: Optional[VerifierClient], prompt_dir: Any = None) -> JudgeOutcome:
    """Identical answers short-circuit to 1; otherwise the judge decides, failing closed."""
    if normalize(pred) == normalize(gold):
        return JudgeOutcome(1, False)
    if client is None:
        return JudgeOutcome(0, False, flags=["judge_unconfigured"])
    text = pred if isinstance(pred, str) else to_text(pred)
    outcome = client.binary_verdict(prompts.render("judge", prompt_dir, question=question, gold=gold, pred=text))
    return JudgeOutcome(outcome.value, True, outcome.replies, [f"judge:{f}" for f in outcome.flags])


def score_answer(
    task: TaskRecord, pred: Any, judge: Optional[VerifierClient] = None, prompt_dir: Any = None
) -> ScoreOutcome:
    if task.answer_type in EXACT_TYPES:
        return exact_match_outcome(pred, task.gold, task.answer_type, task.options)
    if task.answer_type == "float":
        return float_outcome(pred, task.gold)
    j = judge_equivalence(task.query, task.gold, pred, judge, prompt_dir)
    return ScoreOutcome(j.score, tuple(j.flags))
