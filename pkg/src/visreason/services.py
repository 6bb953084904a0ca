"""Wires an :class:`EngineConfig` into live, recording or replaying clients and providers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from visreason import prompts
from visreason.config import EngineConfig, Endpoint
from visreason.engine import Engine, ImageResolver
from visreason.reward import RewardModel, VerifierClient
from visreason.tools.cassette import (
    CassetteStore,
    RecordingChatClient,
    RecordingToolProvider,
    ReplayChatClient,
    ReplayToolProvider,
)
from visreason.tools.chat import ChatClient, HttpChatClient, RuleChatClient
from visreason.tools.providers import HttpToolProvider, MockToolProvider, ToolProvider


def chat_client(ep: Endpoint, max_in_flight: int = 8) -> ChatClient:
    if ep.backend == "rules":
        assert ep.rules is not None
        raw = json.loads(ep.rules.read_text(encoding="utf-8"))
        return RuleChatClient(raw.get("rules", []), raw.get("default"), name=ep.model)
    return HttpChatClient(ep.base_url, ep.model, ep.token, max_in_flight=max_in_flight)


@dataclass
class Services:
    cfg: EngineConfig
    policy: ChatClient
    verifier: ChatClient
    tools: ToolProvider
    images: ImageResolver
    store: Optional[CassetteStore] = None

    @classmethod
    def from_config(cls, cfg: EngineConfig) -> "Services":
        mode = cfg.cassette_mode
        store = CassetteStore(cfg.cassette) if mode != "off" else None
        scenes = MockToolProvider.from_file(cfg.scenes) if cfg.scenes is not None else None
        if mode == "replay":
            assert store is not None
            policy: ChatClient = ReplayChatClient(store, cfg.policy.model)
            verifier: ChatClient = ReplayChatClient(store, cfg.verifier.model)
            tools: ToolProvider = ReplayToolProvider(store)
        else:
            policy = chat_client(cfg.policy, cfg.max_in_flight)
            verifier = chat_client(cfg.verifier, cfg.max_in_flight)
            if cfg.tools_backend == "mock":
                assert scenes is not None
                tools = scenes
            else:
                vqa = chat_client(cfg.vqa, cfg.max_in_flight)
                tools = HttpToolProvider(cfg.detector_url, cfg.depth_url, vqa, max_in_flight=cfg.max_in_flight)
            if mode == "record":
                assert store is not None
                policy = RecordingChatClient(policy, store)
                verifier = RecordingChatClient(verifier, store)
                tools = RecordingToolProvider(tools, store)
        sizes = {ref: (s.width, s.height) for ref, s in scenes.scenes.items()} if scenes is not None else {}
        images = ImageResolver(cfg.image_root, sizes)
        return cls(cfg, policy, verifier, tools, images, store)

    def api_doc(self) -> str:
        if self.cfg.api_doc is not None:
            return self.cfg.api_doc.read_text(encoding="utf-8")
        return prompts.load("api", self.cfg.prompt_dir)

    def verifier_client(self) -> VerifierClient:
        return VerifierClient(self.verifier)

    def reward_model(self) -> RewardModel:
        return RewardModel(
            self.verifier_client(),
            self.api_doc(),
            self.cfg.budget,
            self.cfg.weights,
            self.cfg.prompt_dir,
            max_workers=self.cfg.workers,
        )

    def engine(self, with_reward: bool = True) -> Engine:
        return Engine(
            policy=self.policy,
            tools=self.tools,
            images=self.images,
            reward=self.reward_model() if with_reward else None,
            budget=self.cfg.budget,
            api_doc=self.api_doc(),
            prompt_dir=self.cfg.prompt_dir,
            box_threshold=self.cfg.thresholds.reasoning_box,
            text_threshold=self.cfg.thresholds.reasoning_text,
        )

    def finish(self) -> None:
        """Persist newly recorded interactions."""
        if self.store is not None and self.cfg.cassette_mode == "record":
            self.store.save()
