"""Answer scoring and benchmark reports."""

from visreason.evalharness.report import FLAG_FAILURE, BenchmarkReport, TaskScore, evaluate_benchmark, evaluate_task
from visreason.evalharness.scoring import (
    ANSWER_TYPES,
    MRA_THRESHOLDS,
    JudgeOutcome,
    ScoreOutcome,
    TaskRecord,
    exact_match,
    exact_match_outcome,
    float_outcome,
    judge_equivalence,
    mra,
    normalize,
    parse_number,
    score_answer,
)

__all__ = [
    "ANSWER_TYPES",
    "FLAG_FAILURE",
    "MRA_THRESHOLDS",
    "BenchmarkReport",
    "JudgeOutcome",
    "ScoreOutcome",
    "TaskRecord",
    "TaskScore",
    "evaluate_benchmark",
    "evaluate_task",
    "exact_match",
    "exact_match_outcome",
    "float_outcome",
    "judge_equivalence",
    "mra",
    "normalize",
    "parse_number",
    "score_answer",
]
