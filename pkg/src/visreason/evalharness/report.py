"""Benchmark runs: policy output to executed answer to per-type accuracy."""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

from visreason import serialize
from visreason.engine import Engine
from visreason.evalharness.scoring import ANSWER_TYPES, TaskRecord, score_answer
from visreason.reward import VerifierClient
from visreason.seeding import substream
from visreason.tools.types import ProviderError

log = logging.getLogger(__name__)

FLAG_FAILURE = "execution_failure"


@dataclass
class TaskScore:
    task_id: str
    answer_type: str
    gold: str
    prediction: Any
    score: float
    failed: bool
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "answer_type": self.answer_type,
            "gold": self.gold,
            "prediction": self.prediction,
            "score": float(self.score),
            "failed": self.failed,
            "flags": list(self.flags),
        }


@dataclass
class BenchmarkReport:
    tasks: list[TaskScore]

    @property
    def overall(self) -> float:
        return math.fsum(t.score for t in self.tasks) / len(self.tasks) if self.tasks else 0.0

    @property
    def execution_failures(self) -> int:
        return sum(1 for t in self.tasks if t.failed)

    def per_type(self) -> dict[str, dict[str, Any]]:
        out = {}
        for kind in ANSWER_TYPES:
            scores = [t.score for t in self.tasks if t.answer_type == kind]
            if scores:
                out[kind] = {"count": len(scores), "accuracy": math.fsum(scores) / len(scores)}
        return out

    def to_json(self) -> dict[str, Any]:
        return {
            "n_tasks": len(self.tasks),
            "overall": float(self.overall),
            "per_type": self.per_type(),
            "execution_failures": self.execution_failures,
            "tasks": [t.to_json() for t in self.tasks],
        }

    def csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["task_id", "answer_type", "gold", "prediction", "score", "failed", "flags"])
        for t in self.tasks:
            writer.writerow(
                [t.task_id, t.answer_type, t.gold, serialize.dumps(t.prediction), serialize.dumps(float(t.score)), int(t.failed), ";".join(t.flags)]
            )
        return buf.getvalue()


def evaluate_task(
    task: TaskRecord, engine: Engine, judge: Optional[VerifierClient] = None, seed: int = 0
) -> TaskScore:
    try:
        image = engine.images.resolve(task.image_ref)
        raw = engine.sample(task.query, image, seed=substream(seed, "policy", task.task_id))
    except ProviderError as exc:
        log.warning("task %s: policy unavailable: %s", task.task_id, exc)
        return TaskScore(task.task_id, task.answer_type, task.gold, None, 0.0, True, ["policy_unavailable", FLAG_FAILURE])
    run = engine.run_output(raw, image)
    if not run.has_answer:
        return TaskScore(task.task_id, task.answer_type, task.gold, None, 0.0, True, [*run.flags, FLAG_FAILURE])
    outcome = score_answer(task, run.answer, judge, engine.prompt_dir)
    return TaskScore(
        task.task_id, task.answer_type, task.gold, run.answer_json(), outcome.score, False, [*run.flags, *outcome.flags]
    )


def evaluate_benchmark(
    tasks: Iterable[TaskRecord],
    engine: Engine,
    report_path: str | Path | None = None,
    judge: Optional[VerifierClient] = None,
    csv_path: str | Path | None = None,
    seed: int = 0,
    max_workers: int = 4,
) -> BenchmarkReport:
    """Score every task once, in input order. No task failure aborts the batch."""
    tasks = list(tasks)
    ids = [t.task_id for t in tasks]
    if len(set(ids)) != len(ids):
        raise ValueError("task ids must be unique")
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        scores = list(pool.map(lambda t: evaluate_task(t, engine, judge, seed), tasks))
    report = BenchmarkReport(scores)
    if report_path is not None:
        serialize.write_json(report_path, report.to_json())
    if csv_path is not None:
        serialize.atomic_write_text(csv_path, report.csv_text())
    return report
