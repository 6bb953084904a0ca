"""Batch command surface. Every command reads JSONL/JSON artifacts and writes its outputs atomically."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from visreason import serialize
from visreason.config import ConfigError, EngineConfig, load_config
from visreason.evalharness import TaskRecord, evaluate_benchmark
from visreason.forge import (
    ForgeConfig,
    ForgeItem,
    collect_labels,
    export_coco,
    manifest_rows,
    registered_images,
    run_pipeline,
)
from visreason.grpo import GrpoConfig, QueryItem, build_rollout_batch
from visreason.queries import generate_queries, manifest_row, select_query
from visreason.seeding import substream
from visreason.services import Services
from visreason.toolprog import FormatError, parse_llm_output
from visreason.tools.cassette import UnrecordedCall
from visreason.tools.types import ProviderError

log = logging.getLogger("visreason")


class CommandError(RuntimeError):
    pass


def _read_rows(path: str) -> list[Any]:
    try:
        return serialize.read_jsonl(path)
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise CommandError(f"{path} is not valid JSONL: {exc}") from None


def cmd_generate_queries(args: argparse.Namespace, svc: Services) -> dict[str, Any]:
    rows = []
    for row in _read_rows(args.images):
        ref = row["image_ref"] if isinstance(row, dict) else str(row)
        source = row.get("source", "") if isinstance(row, dict) else ""
        image = svc.images.resolve(ref)
        cands = generate_queries(image, svc.policy, svc.cfg.prompt_dir)
        selected = None if cands.skipped else select_query(cands, svc.cfg.seed)
        rows.append(manifest_row(cands, selected, source))
    serialize.write_jsonl(args.out, rows)
    return {"images": len(rows), "selected": sum(1 for r in rows if r["selected"])}


def _query_items(path: str) -> list[QueryItem]:
    items = []
    for i, row in enumerate(_read_rows(path)):
        if isinstance(row, dict) and row.get("selected", "x") is None:
            continue
        try:
            items.append(QueryItem.from_json(row))
        except (ValueError, TypeError, AttributeError) as exc:
            raise CommandError(f"{path}:{i + 1}: {exc}") from None
    return items


def cmd_rollout(args: argparse.Namespace, svc: Services) -> dict[str, Any]:
    engine = svc.engine(with_reward=False)
    rows = []
    for item in _query_items(args.queries):
        image = svc.images.resolve(item.image_ref)
        raw = engine.sample(item.query, image, seed=substream(svc.cfg.seed, "policy", item.query_id, 0))
        run = engine.run_output(raw, image)
        rows.append(
            {
                "query_id": item.query_id,
                "image_ref": item.image_ref,
                "query": item.query,
                "raw": raw,
                "plan": run.plan,
                "code": run.code,
                "flags": run.flags,
                "trace": run.trace_json(),
                "answer": run.answer_json(),
            }
        )
    serialize.write_jsonl(args.out, rows)
    return {"rollouts": len(rows)}


def _raw_output(row: Any) -> str:
    if not isinstance(row, dict):
        raise ValueError("row is not an object")
    if isinstance(row.get("raw"), str):
        return row["raw"]
    if isinstance(row.get("plan"), str) and isinstance(row.get("code"), str):
        return f"<plan>\n{row['plan']}\n</plan><answer>\n{row['code']}\n</answer>"
    raise ValueError("row carries neither raw nor plan and code")


def cmd_score(args: argparse.Namespace, svc: Services) -> dict[str, Any]:
    model = svc.reward_model()
    out = []
    for i, row in enumerate(_read_rows(args.rollouts)):
        qid = row.get("query_id", str(i)) if isinstance(row, dict) else str(i)
        try:
            raw = _raw_output(row)
            query = row.get("query")
            if not isinstance(query, str):
                raise ValueError("row has no query text")
        except ValueError as exc:
            out.append({"query_id": qid, "reward": None, "flags": [f"malformed_row:{exc}"]})
            continue
        vector = model.score(query, raw)
        out.append({"query_id": qid, "reward": vector.to_json(), "flags": vector.flags})
    serialize.write_jsonl(args.out, out)
    return {"rows": len(out), "malformed": sum(1 for r in out if r["reward"] is None)}


def cmd_grpo_batch(args: argparse.Namespace, svc: Services) -> dict[str, Any]:
    cfg = svc.cfg.grpo
    if args.group_size is not None:
        cfg = GrpoConfig(cfg.epsilon, cfg.beta, args.group_size)
    groups = build_rollout_batch(
        _query_items(args.queries), svc.engine(), cfg, svc.cfg.seed, args.out, max_workers=svc.cfg.workers
    )
    return {"groups": len(groups), "excluded": sum(1 for g in groups if g.excluded)}


def _forge_items(path: str, svc: Services) -> list[ForgeItem]:
    engine = None
    items = []
    for row in _read_rows(path):
        code = row.get("code")
        if not isinstance(code, str):
            query = row.get("query", row.get("selected"))
            if not isinstance(query, str):
                log.warning("skipping %s: no program and no query", row.get("image_ref"))
                continue
            engine = engine or svc.engine(with_reward=False)
            image = svc.images.resolve(row["image_ref"])
            raw = engine.sample(query, image, seed=substream(svc.cfg.seed, "forge-policy", row["image_ref"], query))
            try:
                code = parse_llm_output(raw).code
            except FormatError as exc:
                log.warning("skipping %s: policy output malformed (%s)", row["image_ref"], exc.kind)
                continue
        items.append(ForgeItem(row["image_ref"], code, row.get("source", "")))
    return items


def cmd_forge_labels(args: argparse.Namespace, svc: Services) -> dict[str, Any]:
    items = _forge_items(args.queries, svc)
    t = svc.cfg.thresholds
    cfg = ForgeConfig(
        box_threshold=t.forge_box, text_threshold=t.forge_text, max_workers=svc.cfg.workers, prompt_dir=svc.cfg.prompt_dir
    )
    runs = run_pipeline(items, svc.images.resolve, svc.tools, svc.verifier, cfg)
    export_coco(collect_labels(runs), args.out, registered_images(runs, svc.images.resolve))
    manifest = args.manifest or f"{args.out}.manifest.jsonl"
    serialize.write_jsonl(manifest, manifest_rows(runs))
    return {"images": len(runs), "labels": len(collect_labels(runs)), "failed": sum(1 for r in runs if r.error)}


def cmd_evaluate(args: argparse.Namespace, svc: Services) -> dict[str, Any]:
    try:
        tasks = [TaskRecord.from_json(r) for r in _read_rows(args.tasks)]
    except (KeyError, ValueError) as exc:
        raise CommandError(f"bad task record: {exc}") from None
    report = evaluate_benchmark(
        tasks, svc.engine(with_reward=False), args.out, svc.verifier_client(), args.csv, svc.cfg.seed, svc.cfg.workers
    )
    return {"tasks": len(tasks), "overall": report.overall, "execution_failures": report.execution_failures}


COMMANDS: dict[str, Callable[[argparse.Namespace, Services], dict[str, Any]]] = {
    "generate-queries": cmd_generate_queries,
    "rollout": cmd_rollout,
    "score": cmd_score,
    "grpo-batch": cmd_grpo_batch,
    "forge-labels": cmd_forge_labels,
    "evaluate": cmd_evaluate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--cassette", help="cassette file (implies replay unless --cassette-mode is given)")
    common.add_argument("--cassette-mode", choices=("off", "record", "replay"))
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--log-level", default="WARNING")

    parser = argparse.ArgumentParser(prog="visreason", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-queries", parents=[common], help="generate and select one query per image")
    p.add_argument("--images", required=True, help="JSONL of {image_ref, source}")
    p.add_argument("--out", required=True, help="query manifest JSONL")

    p = sub.add_parser("rollout", parents=[common], help="sample and execute one program per query")
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("score", parents=[common], help="score policy outputs with the reward model")
    p.add_argument("--rollouts", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("grpo-batch", parents=[common], help="build scored rollout groups for the trainer")
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--group-size", type=int)

    p = sub.add_parser("forge-labels", parents=[common], help="run the pseudo-label forge and export COCO")
    p.add_argument("--queries", required=True, help="JSONL of {image_ref, source, code | query}")
    p.add_argument("--out", required=True, help="COCO JSON output")
    p.add_argument("--manifest", help="run manifest JSONL (default: <out>.manifest.jsonl)")

    p = sub.add_parser("evaluate", parents=[common], help="score a benchmark of task records")
    p.add_argument("--tasks", required=True)
    p.add_argument("--out", required=True, help="report JSON")
    p.add_argument("--csv", help="optional per-task CSV")

    p = sub.add_parser("replay-verify", help="re-run a command against its cassette and compare outputs byte for byte")
    p.add_argument("--expected", required=True, help="output file of the recorded run")
    p.add_argument("inner", nargs=argparse.REMAINDER, help="-- <command> <args...>")
    return parser


def _config(args: argparse.Namespace) -> EngineConfig:
    cfg = load_config(args.config)
    cfg = cfg.with_cassette(args.cassette_mode, args.cassette)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def run_command(args: argparse.Namespace) -> dict[str, Any]:
    svc = Services.from_config(_config(args))
    try:
        return COMMANDS[args.command](args, svc)
    finally:
        svc.finish()


def replay_verify(parser: argparse.ArgumentParser, expected: str, inner: Sequence[str]) -> dict[str, Any]:
    inner = list(inner)
    if inner and inner[0] == "--":
        inner = inner[1:]
    if not inner or inner[0] not in COMMANDS:
        raise CommandError(f"replay-verify needs one of {sorted(COMMANDS)} after --")
    args = parser.parse_args(inner)
    if args.cassette_mode not in (None, "replay"):
        raise CommandError("replay-verify always replays; drop --cassette-mode")
    args.cassette_mode = "replay"
    if not getattr(args, "cassette", None) and not args.config:
        raise CommandError("replay-verify needs --cassette or a config with a cassette path")
    want = Path(expected).read_bytes()
    with tempfile.TemporaryDirectory() as tmp:
        args.out = str(Path(tmp) / Path(args.out).name)
        if hasattr(args, "manifest"):
            args.manifest = str(Path(tmp) / "manifest.jsonl")
        if hasattr(args, "csv"):
            args.csv = None
        run_command(args)
        got = Path(args.out).read_bytes()
    if got != want:
        offset = next((i for i, (a, b) in enumerate(zip(got, want)) if a != b), min(len(got), len(want)))
        raise CommandError(f"replayed output differs from {expected} at byte {offset}")
    return {"verified": expected, "bytes": len(got)}


def _fail(command: Optional[str], exc: BaseException, code: int, field: Optional[str] = None) -> int:
    body = {"command": command, "error": type(exc).__name__, "message": str(exc)}
    if field is not None:
        body["field"] = field
    sys.stderr.write(json.dumps(body) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(args, "log_level", "WARNING").upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay-verify":
            summary = replay_verify(parser, args.expected, args.inner)
        else:
            summary = run_command(args)
    except ConfigError as exc:
        return _fail(args.command, exc, 2, exc.field)
    except UnrecordedCall as exc:
        return _fail(args.command, exc, 3)
    except (CommandError, ProviderError, OSError, ValueError, KeyError) as exc:
        return _fail(args.command, exc, 1)
    sys.stdout.write(serialize.dumps({"command": args.command, **summary}) + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
