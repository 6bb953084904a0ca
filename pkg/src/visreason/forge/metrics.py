"""Precision of verified labels and source-balanced sampling for detector training."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from visreason.seeding import rng


class EmptyCounts(ValueError):
    pass


class NoSources(ValueError):
    pass


@dataclass(frozen=True)
class PrecisionCounts:
    tp: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v!r}")


def precision(counts: PrecisionCounts) -> float:
    """TP / (TP + FP + FN)."""
    total = counts.tp + counts.fp + counts.fn
    if total == 0:
        raise EmptyCounts("precision is undefined when all counts are zero")
    return counts.tp / total


def balanced_sample(groups: Mapping[str, Sequence[str]], batch_size: int, seed: int) -> list[str]:
    """Each draw picks a source uniformly, then an image uniformly within it."""
    sources = sorted(s for s, ids in groups.items() if len(ids) > 0)
    if not sources:
        raise NoSources("no non-empty source group")
    if batch_size < 0:
        raise ValueError("batch_size must be >= 0")
    gen = rng(seed, "balanced_sample")
    picks = gen.integers(0, len(sources), size=batch_size)
    out = []
    for s in picks:
        ids = groups[sources[int(s)]]
        out.append(ids[int(gen.integers(0, len(ids)))])
    return out
