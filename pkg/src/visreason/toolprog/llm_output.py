"""Extraction of the plan and program from a raw model response."""

from __future__ import annotations

from dataclasses import dataclass


class FormatError(ValueError):
    """Raised when a response does not follow the plan/answer tag template.

    ``kind`` is one of ``missing_plan``, ``missing_answer``, ``empty_plan``,
    ``empty_answer``.
    """

    KINDS = ("missing_plan", "missing_answer", "empty_plan", "empty_answer")

    def __init__(self, kind: str) -> None:
        if kind not in self.KINDS:
            raise ValueError(f"unknown format error kind {kind!r}")
        super().__init__(kind)
        self.kind = kind


@dataclass(frozen=True)
class PlanAndCode:
    plan: str
    code: str


def _interior(text: str, tag: str) -> str | None:
    open_tag, close_tag = f"<{tag}>", f"</{tag}>"
    start = text.find(open_tag)
    if start < 0:
        return None
    start += len(open_tag)
    end = text.find(close_tag, start)
    if end < 0:
        return None
    return text[start:end]


def _trim_blank_lines(code: str) -> str:
    lines = code.splitlines()
    while lines and not lines[0].strip():
        lines.pop(0)
    while lines and not lines[-1].strip():
        lines.pop()
    return "\n".join(lines)


def parse_llm_output(raw: str) -> PlanAndCode:
    """Split ``raw`` into the first ``<plan>`` and first ``<answer>`` interiors.

    The plan is whitespace-trimmed. The code keeps its indentation; only blank
    leading and trailing lines are removed.
    """
    plan = _interior(raw, "plan")
    if plan is None:
        raise FormatError("missing_plan")
    if not plan.strip():
        raise FormatError("empty_plan")
    code = _interior(raw, "answer")
    if code is None:
        raise FormatError("missing_answer")
    if not code.strip():
        raise FormatError("empty_answer")
    return PlanAndCode(plan.strip(), _trim_blank_lines(code))


def format_ok(raw: str) -> bool:
    try:
        parse_llm_output(raw)
    except FormatError:
        return False
    return True
