"""Interpreter for tool programs: execution, dry runs and answer extraction."""

from visreason.runtime.dryrun import DryRunResult, GroundingCalls, collect_grounding_calls, dry_run, dummy_bridge
from visreason.runtime.interpreter import (
    COMPLETED,
    ERROR,
    HALTED,
    Budget,
    ExecutionResult,
    MissingAnswer,
    ToolBridge,
    ToolCall,
    execute,
    extract_final_answer,
)
from visreason.runtime.values import ErrorInfo, ProgramRuntimeError

__all__ = [
    "COMPLETED",
    "ERROR",
    "HALTED",
    "Budget",
    "DryRunResult",
    "ErrorInfo",
    "ExecutionResult",
    "GroundingCalls",
    "MissingAnswer",
    "ProgramRuntimeError",
    "ToolBridge",
    "ToolCall",
    "collect_grounding_calls",
    "dry_run",
    "dummy_bridge",
    "execute",
    "extract_final_answer",
]
