"""Shared pipeline pieces: image resolution, policy prompting, and one rollout end to end."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from visreason import prompts
from visreason.reward import RewardModel, RewardVector
from visreason.runtime import Budget, ExecutionResult, MissingAnswer, ToolBridge, execute, extract_final_answer
from visreason.runtime.values import to_json
from visreason.toolprog import FormatError, ProgramSyntaxError, parse_llm_output, parse_program
from visreason.toolprog.corpus import icl_examples
from visreason.tools.chat import ChatClient, Message, call_with_retries, user_message
from visreason.tools.providers import REASONING_BOX_THRESHOLD, REASONING_TEXT_THRESHOLD, MockToolProvider, ToolProvider
from visreason.tools.types import ImageHandle, ProviderError

log = logging.getLogger(__name__)


class ImageResolver:
    """Turns an image ref into pixels.

    Refs are resolved against ``root`` first. A ref that names no file but has
    known dimensions (as mock scenes do) gets a deterministic placeholder, so
    fixture runs need no image files.
    """

    def __init__(self, root: str | Path | None = None, known_sizes: Mapping[str, tuple[int, int]] | None = None) -> None:
        self.root = Path(root) if root is not None else None
        self.known_sizes = dict(known_sizes or {})
        self._cache: dict[str, ImageHandle] = {}

    @classmethod
    def for_provider(cls, provider: ToolProvider, root: str | Path | None = None) -> "ImageResolver":
        sizes: dict[str, tuple[int, int]] = {}
        inner = getattr(provider, "inner", provider)
        if isinstance(inner, MockToolProvider):
            sizes = {ref: (s.width, s.height) for ref, s in inner.scenes.items()}
        return cls(root, sizes)

    def resolve(self, ref: str) -> ImageHandle:
        if ref in self._cache:
            return self._cache[ref]
        candidates = [Path(ref)] if self.root is None else [self.root / ref, Path(ref)]
        for path in candidates:
            if path.is_file():
                loaded = ImageHandle.from_path(path)
                handle = ImageHandle(loaded.data, loaded.width, loaded.height, ref=ref, fmt=loaded.fmt)
                break
        else:
            size = self.known_sizes.get(ref) or self.known_sizes.get(Path(ref).name)
            if size is None:
                raise ProviderError(f"image {ref!r} not found")
            handle = ImageHandle.placeholder(size[0], size[1], ref=ref)
        self._cache[ref] = handle
        return handle


def policy_messages(query: str, image: ImageHandle, api_doc: str, icl: str, prompt_dir: Any = None) -> list[Message]:
    system = prompts.render("system", prompt_dir, api=api_doc, icl=icl)
    return [{"role": "system", "content": system}, user_message(image, f"Question: {query}")]


@dataclass
class ProgramRun:
    """A parsed and executed policy output."""

    raw: str
    plan: str = ""
    code: str = ""
    result: Optional[ExecutionResult] = None
    answer: Any = None
    has_answer: bool = False
    flags: list[str] = field(default_factory=list)

    def trace_json(self) -> list[dict[str, Any]]:
        return [c.to_json() for c in self.result.trace] if self.result else []

    def answer_json(self) -> Any:
        return to_json(self.answer) if self.has_answer else None


@dataclass
class Engine:
    policy: ChatClient
    tools: ToolProvider
    images: ImageResolver
    reward: Optional[RewardModel] = None
    budget: Budget = field(default_factory=Budget)
    api_doc: str = field(default_factory=lambda: prompts.load("api"))
    icl: str = field(default_factory=icl_examples)
    prompt_dir: Any = None
    policy_params: dict[str, Any] = field(default_factory=dict)
    policy_attempts: int = 3
    box_threshold: float = REASONING_BOX_THRESHOLD
    text_threshold: float = REASONING_TEXT_THRESHOLD

    def sample(self, query: str, image: ImageHandle, seed: int | None = None) -> str:
        params = dict(self.policy_params)
        if seed is not None:
            params["seed"] = seed
        messages = policy_messages(query, image, self.api_doc, self.icl, self.prompt_dir)
        return call_with_retries(lambda: self.policy.complete(messages, **params), self.policy_attempts)

    def run_output(self, raw: str, image: ImageHandle) -> ProgramRun:
        run = ProgramRun(raw)
        try:
            pc = parse_llm_output(raw)
        except FormatError as exc:
            run.flags.append(f"format:{exc.kind}")
            return run
        run.plan, run.code = pc.plan, pc.code
        try:
            program = parse_program(pc.code)
        except ProgramSyntaxError as exc:
            run.flags.append(f"parse_error:{exc.message}")
            return run
        bridge = ToolBridge(self.tools, {image.ref: image}, self.box_threshold, self.text_threshold)
        run.result = execute(program, bridge, self.budget, {"img_pth": image.ref})
        if not run.result.ok:
            assert run.result.error is not None
            run.flags.append(f"execution_error:{run.result.error.kind}")
            return run
        try:
            run.answer = extract_final_answer(run.result)
            run.has_answer = True
        except MissingAnswer:
            run.flags.append("missing_answer")
        return run

    def score(self, query: str, raw: str) -> RewardVector:
        if self.reward is None:
            raise ValueError("engine has no reward model configured")
        return self.reward.score(query, raw)
