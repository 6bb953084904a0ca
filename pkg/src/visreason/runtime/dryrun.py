"""Dry runs with stand-in tools, and static extraction of detection prompts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from visreason.runtime.interpreter import Budget, ExecutionResult, ToolBridge, execute
from visreason.runtime.values import ErrorInfo
from visreason.toolprog import nodes as n
from visreason.toolprog.names import DETECT_TOOL
from visreason.tools.providers import DummyToolProvider
from visreason.tools.types import ImageHandle

DRY_RUN_IMAGE_REF = "img_pth"


@dataclass(frozen=True)
class DryRunResult:
    passed: bool
    reason: Optional[str] = None
    error: Optional[ErrorInfo] = None

    def __bool__(self) -> bool:
        return self.passed


def dummy_bridge() -> ToolBridge:
    image = ImageHandle.placeholder(640, 480, ref=DRY_RUN_IMAGE_REF)
    return ToolBridge(DummyToolProvider(), {DRY_RUN_IMAGE_REF: image})


def dry_run_result(program: n.Program, budget: Budget = Budget()) -> tuple[DryRunResult, ExecutionResult]:
    result = execute(program, dummy_bridge(), budget)
    if result.ok:
        return DryRunResult(True), result
    assert result.error is not None
    return DryRunResult(False, str(result.error.kind), result.error), result


def dry_run(program: n.Program, budget: Budget = Budget()) -> DryRunResult:
    """Pass iff the program runs to completion (or a top-level return) on the dummy tools."""
    return dry_run_result(program, budget)[0]


@dataclass(frozen=True)
class GroundingCalls:
    prompts: list[str] = field(default_factory=list)
    dynamic: int = 0


def collect_grounding_calls(program: n.Program) -> GroundingCalls:
    """Literal prompts of every detection call in source order; non-literal prompts are counted."""
    prompts: list[str] = []
    dynamic = 0
    for node in n.walk(program):
        if isinstance(node, n.Call) and node.func == DETECT_TOOL:
            if len(node.args) >= 2 and isinstance(node.args[1], n.Str):
                prompts.append(node.args[1].value)
            else:
                dynamic += 1
    return GroundingCalls(prompts, dynamic)
