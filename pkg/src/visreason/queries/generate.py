"""Spatial-reasoning query generation: prompt per image, parse up to five candidates or SKIP."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional

from visreason import prompts
from visreason.seeding import rng
from visreason.tools.chat import ChatClient, call_with_retries, user_message
from visreason.tools.types import ImageHandle

MAX_CANDIDATES = 5
FLAG_UNDER_COUNT = "under_count"
FLAG_OVER_COUNT = "over_count"
FLAG_MALFORMED = "malformed_reply"
REASK = "Put each question inside its own <answer></answer> tags, or reply with only <answer>SKIP</answer>."

_SPAN = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)


class Malformed(ValueError):
    pass


class Skipped(LookupError):
    pass


class Skip:
    """Sentinel returned by :func:`parse_generation` for a SKIP reply."""

    def __repr__(self) -> str:
        return "SKIP"


SKIP = Skip()


@dataclass(frozen=True)
class QueryCandidateSet:
    image_ref: str
    candidates: tuple[str, ...] = ()
    skipped: bool = False
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "flags", tuple(self.flags))
        if self.skipped == bool(self.candidates):
            raise ValueError("a candidate set is either skipped or holds at least one candidate")
        if len(self.candidates) > MAX_CANDIDATES:
            raise ValueError(f"at most {MAX_CANDIDATES} candidates")


def parse_generation(reply: str) -> tuple[str, ...] | Skip:
    """Candidates from every non-empty ``<answer>`` span (first five), or SKIP for a lone SKIP span."""
    spans = [s.strip() for s in _SPAN.findall(reply)]
    if not spans:
        raise Malformed("no <answer> spans")
    if len(spans) == 1 and spans[0].lower() == "skip":
        return SKIP
    candidates = tuple(s for s in spans if s and s.lower() != "skip")
    if not candidates:
        raise Malformed("answer spans are empty")
    return candidates[:MAX_CANDIDATES]


def _count_flags(n_spans: int) -> tuple[str, ...]:
    if n_spans < MAX_CANDIDATES:
        return (FLAG_UNDER_COUNT,)
    if n_spans > MAX_CANDIDATES:
        return (FLAG_OVER_COUNT,)
    return ()


def generate_queries(
    image: ImageHandle, client: ChatClient, prompt_dir: Any = None, attempts: int = 3
) -> QueryCandidateSet:
    """One generation request with provider-default sampling; a malformed reply gets one re-ask."""
    messages = [user_message(prompts.load("query_generation", prompt_dir), image)]
    for _ in range(2):
        reply = call_with_retries(lambda: client.complete(messages), attempts)
        try:
            parsed = parse_generation(reply)
        except Malformed:
            messages = messages + [{"role": "assistant", "content": reply}, {"role": "user", "content": REASK}]
            continue
        if isinstance(parsed, Skip):
            return QueryCandidateSet(image.ref, skipped=True)
        n_spans = len([s for s in _SPAN.findall(reply) if s.strip()])
        return QueryCandidateSet(image.ref, parsed, flags=_count_flags(n_spans))
    return QueryCandidateSet(image.ref, skipped=True, flags=(FLAG_MALFORMED,))


def select_query(candidates: QueryCandidateSet, seed: int) -> str:
    """Seeded uniform choice; the substream is keyed by the image ref."""
    if candidates.skipped:
        raise Skipped(f"image {candidates.image_ref!r} was skipped")
    gen = rng(seed, "select_query", candidates.image_ref)
    return candidates.candidates[int(gen.integers(0, len(candidates.candidates)))]


def manifest_row(candidates: QueryCandidateSet, selected: Optional[str], source: str = "") -> dict[str, Any]:
    return {
        "image_ref": candidates.image_ref,
        "source": source,
        "candidates": list(candidates.candidates),
        "selected": selected,
        "flags": list(candidates.flags) + (["skipped"] if candidates.skipped else []),
    }


@dataclass
class TrainingMix:
    rows: list[dict[str, Any]] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)


def compose_training_mix(
    generated: Iterable[Mapping[str, Any]],
    benchmark: Iterable[Mapping[str, Any]],
    n_generated: int = 400,
    n_benchmark: int = 400,
    seed: int = 0,
) -> TrainingMix:
    """Seeded draw of ``n_generated`` generated pairs plus ``n_benchmark`` benchmark pairs.

    Skipped generation rows are ignored. Raises if either pool is too small.
    """
    gen_pool = [dict(r) for r in generated if r.get("selected")]
    bench_pool = [dict(r) for r in benchmark]
    if len(gen_pool) < n_generated or len(bench_pool) < n_benchmark:
        raise ValueError(
            f"need {n_generated} generated and {n_benchmark} benchmark rows, "
            f"have {len(gen_pool)} and {len(bench_pool)}"
        )
    g = rng(seed, "training_mix")
    picked_gen = [gen_pool[int(i)] for i in sorted(g.choice(len(gen_pool), n_generated, replace=False))]
    picked_bench = [bench_pool[int(i)] for i in sorted(g.choice(len(bench_pool), n_benchmark, replace=False))]
    rows: list[dict[str, Any]] = []
    for origin, pool in (("generated", picked_gen), ("benchmark", picked_bench)):
        for i, r in enumerate(pool):
            query = r.get("selected", r.get("query"))
            rows.append({"query_id": f"{origin}-{i:04d}", "image_ref": r["image_ref"], "query": query, "origin": origin})
    return TrainingMix(rows, {"generated": len(picked_gen), "benchmark": len(picked_bench), "total": len(rows)})


