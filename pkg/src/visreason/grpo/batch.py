"""Rollout groups: sample G outputs per query, score them, center the rewards, emit JSONL."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

from visreason import serialize
from visreason.engine import Engine
from visreason.grpo.objective import GrpoConfig, group_advantages
from visreason.reward import FLAG_UNAVAILABLE, HEADS
from visreason.seeding import substream
from visreason.tools.types import ProviderError

log = logging.getLogger(__name__)

FLAG_EXCLUDED = "group_excluded"


class PolicyUnavailable(RuntimeError):
    """No policy sample could be obtained for any query."""


@dataclass(frozen=True)
class QueryItem:
    query_id: str
    query: str
    image_ref: str
    source: str = ""

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "QueryItem":
        query = obj.get("query", obj.get("selected"))
        if not isinstance(query, str) or not query.strip():
            raise ValueError(f"query row has no query text: {obj!r}")
        ref = obj.get("image_ref")
        if not isinstance(ref, str) or not ref:
            raise ValueError(f"query row has no image_ref: {obj!r}")
        qid = obj.get("query_id", obj.get("task_id"))
        if qid is None:
            qid = serialize.content_key({"query": query, "image_ref": ref})[:12]
        return cls(str(qid), query, ref, str(obj.get("source", "")))


@dataclass
class RolloutRecord:
    query_id: str
    group_id: str
    member_index: int
    query: str
    plan: str
    code: str
    reward: dict[str, Any]
    advantage: float
    flags: list[str] = field(default_factory=list)
    trace: list[dict[str, Any]] = field(default_factory=list)
    answer: Any = None

    FIELDS = (
        "query_id",
        "group_id",
        "member_index",
        "query",
        "plan",
        "code",
        "reward",
        "advantage",
        "flags",
        "trace",
        "answer",
    )

    def to_json(self) -> dict[str, Any]:
        out = {name: getattr(self, name) for name in self.FIELDS}
        out["reward"] = {h: self.reward[h] for h in (*HEADS, "total")}
        return out

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "RolloutRecord":
        missing = [f for f in cls.FIELDS if f not in obj]
        if missing:
            raise ValueError(f"rollout record lacks fields {missing}")
        return cls(**{f: obj[f] for f in cls.FIELDS})


@dataclass
class GrpoGroup:
    query_id: str
    group_id: str
    members: list[RolloutRecord]
    rewards: list[float]
    advantages: list[float]
    excluded: bool = False

    def __post_init__(self) -> None:
        if len(self.members) < 2 or not (len(self.members) == len(self.rewards) == len(self.advantages)):
            raise ValueError("a group needs >= 2 members with one reward and advantage each")


@dataclass
class _Sample:
    item: QueryItem
    index: int
    raw: Optional[str]
    error: Optional[str] = None


def _as_items(queries: Iterable[QueryItem | Mapping[str, Any]]) -> list[QueryItem]:
    items = [q if isinstance(q, QueryItem) else QueryItem.from_json(q) for q in queries]
    ids = [q.query_id for q in items]
    if len(set(ids)) != len(ids):
        raise ValueError("query ids must be unique")
    return items


def build_rollout_batch(
    queries: Iterable[QueryItem | Mapping[str, Any]],
    engine: Engine,
    cfg: GrpoConfig = GrpoConfig(),
    seed: int = 0,
    out_path: str | Path | None = None,
    max_workers: int = 4,
) -> list[GrpoGroup]:
    """Sample ``cfg.group_size`` outputs per query and assemble scored groups.

    Groups whose members could not all be sampled are dropped and logged.
    Groups with any verifier outage are kept but marked excluded. Output is
    sorted by query id regardless of completion order.
    """
    items = _as_items(queries)

    def sample(job: tuple[QueryItem, int]) -> _Sample:
        item, i = job
        try:
            image = engine.images.resolve(item.image_ref)
            raw = engine.sample(item.query, image, seed=substream(seed, "policy", item.query_id, i))
        except ProviderError as exc:
            return _Sample(item, i, None, str(exc))
        return _Sample(item, i, raw)

    jobs = [(item, i) for item in items for i in range(cfg.group_size)]
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        samples = list(pool.map(sample, jobs))
    if jobs and all(s.raw is None for s in samples):
        raise PolicyUnavailable(f"policy produced no output for {len(items)} queries: {samples[0].error}")

    by_query: dict[str, list[_Sample]] = {}
    for s in samples:
        by_query.setdefault(s.item.query_id, []).append(s)

    def assemble(item: QueryItem) -> Optional[GrpoGroup]:
        members = sorted(by_query[item.query_id], key=lambda s: s.index)
        failed = [s for s in members if s.raw is None]
        if failed:
            log.warning(
                "dropping group %s: %d of %d samples failed (%s)",
                item.query_id,
                len(failed),
                cfg.group_size,
                failed[0].error,
            )
            return None
        return _score_group(item, members, engine, seed)

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        assembled = list(pool.map(assemble, items))
    groups = sorted((g for g in assembled if g is not None), key=lambda g: g.query_id)
    if out_path is not None:
        write_rollouts(out_path, groups)
    return groups


def _score_group(item: QueryItem, members: Sequence[_Sample], engine: Engine, seed: int) -> GrpoGroup:
    image = engine.images.resolve(item.image_ref)
    group_id = f"{item.query_id}:{substream(seed, 'group', item.query_id):016x}"
    records: list[RolloutRecord] = []
    rewards: list[float] = []
    for s in members:
        assert s.raw is not None
        vector = engine.score(item.query, s.raw)
        run = engine.run_output(s.raw, image)
        flags = list(vector.flags)
        flags += [f for f in run.flags if f not in flags]
        rewards.append(vector.total)
        records.append(
            RolloutRecord(
                query_id=item.query_id,
                group_id=group_id,
                member_index=s.index,
                query=item.query,
                plan=run.plan,
                code=run.code,
                reward=vector.to_json(),
                advantage=0.0,
                flags=flags,
                trace=run.trace_json(),
                answer=run.answer_json(),
            )
        )
    advantages = group_advantages(rewards)
    excluded = any(FLAG_UNAVAILABLE in r.flags for r in records)
    for rec, adv in zip(records, advantages):
        rec.advantage = adv
        if excluded:
            rec.flags.append(FLAG_EXCLUDED)
    if excluded:
        log.warning("group %s marked excluded: verifier unavailable", item.query_id)
    return GrpoGroup(item.query_id, group_id, records, rewards, advantages, excluded)


def rollout_rows(groups: Iterable[GrpoGroup]) -> list[dict[str, Any]]:
    return [m.to_json() for g in groups for m in g.members]


def write_rollouts(path: str | Path, groups: Iterable[GrpoGroup]) -> None:
    serialize.write_jsonl(path, rollout_rows(groups))
