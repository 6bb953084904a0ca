"""Engine configuration: TOML file plus environment secrets, validated before any network use."""

from __future__ import annotations

import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from visreason.grpo import GrpoConfig
from visreason.reward import InvalidWeights, RewardWeights
from visreason.runtime import Budget
from visreason.tools.providers import REASONING_BOX_THRESHOLD, REASONING_TEXT_THRESHOLD
from visreason.forge.stages import FORGE_BOX_THRESHOLD, FORGE_TEXT_THRESHOLD

log = logging.getLogger(__name__)

CASSETTE_MODES = ("off", "record", "replay")
CHAT_BACKENDS = ("http", "rules")
TOOL_BACKENDS = ("mock", "http")
TOKEN_ENV = {"policy": "VALOR_POLICY_TOKEN", "verifier": "VALOR_VERIFIER_TOKEN", "vqa": "VALOR_VQA_TOKEN"}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the offending value."""

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


@dataclass(frozen=True)
class Endpoint:
    backend: str = "http"
    base_url: str = ""
    model: str = ""
    rules: Optional[Path] = None
    token: Optional[str] = field(default=None, repr=False)


@dataclass(frozen=True)
class Thresholds:
    reasoning_box: float = REASONING_BOX_THRESHOLD
    reasoning_text: float = REASONING_TEXT_THRESHOLD
    forge_box: float = FORGE_BOX_THRESHOLD
    forge_text: float = FORGE_TEXT_THRESHOLD


@dataclass(frozen=True)
class EngineConfig:
    policy: Endpoint = Endpoint(model="policy")
    verifier: Endpoint = Endpoint(model="verifier")
    vqa: Endpoint = Endpoint(model="vqa")
    detector_url: str = ""
    depth_url: str = ""
    tools_backend: str = "mock"
    scenes: Optional[Path] = None
    weights: RewardWeights = RewardWeights()
    grpo: GrpoConfig = GrpoConfig()
    budget: Budget = Budget()
    thresholds: Thresholds = Thresholds()
    max_in_flight: int = 8
    workers: int = 4
    cassette_mode: str = "off"
    cassette: Optional[Path] = None
    seed: int = 0
    prompt_dir: Optional[Path] = None
    api_doc: Optional[Path] = None
    image_root: Optional[Path] = None

    def with_cassette(self, mode: Optional[str], path: Optional[str | Path]) -> "EngineConfig":
        cfg = self
        if path is not None:
            cfg = replace(cfg, cassette=Path(path))
        if mode is not None:
            cfg = replace(cfg, cassette_mode=mode)
        elif path is not None and cfg.cassette_mode == "off":
            cfg = replace(cfg, cassette_mode="replay")
        validate(cfg)
        return cfg


def _table(raw: Mapping[str, Any], key: str, path: str) -> Mapping[str, Any]:
    value = raw.get(key, {})
    if not isinstance(value, Mapping):
        raise ConfigError(path, "must be a table")
    return value


def _only(table: Mapping[str, Any], allowed: set[str], path: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")


def _path(value: Any, base: Path, path: str) -> Optional[Path]:
    if value is None:
        return None
    if not isinstance(value, str) or not value:
        raise ConfigError(path, "must be a non-empty path string")
    p = Path(value)
    return p if p.is_absolute() else base / p


def _number(table: Mapping[str, Any], key: str, default: Any, path: str, kind: type = float) -> Any:
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or (kind is int and not isinstance(value, int)):
        raise ConfigError(f"{path}.{key}" if path else key, f"must be {'an integer' if kind is int else 'a number'}")
    return kind(value)


def _endpoint(raw: Mapping[str, Any], name: str, base: Path, env: Mapping[str, str]) -> Endpoint:
    path = f"endpoints.{name}"
    table = _table(raw, name, path)
    _only(table, {"backend", "base_url", "model", "rules", "token"}, path)
    file_token = table.get("token")
    if file_token is not None:
        log.warning("%s.token is set in the config file; prefer %s", path, TOKEN_ENV[name])
    token = env.get(TOKEN_ENV[name]) or file_token
    for key in ("backend", "base_url", "model"):
        if key in table and not isinstance(table[key], str):
            raise ConfigError(f"{path}.{key}", "must be a string")
    return Endpoint(
        backend=table.get("backend", "http"),
        base_url=table.get("base_url", ""),
        model=table.get("model", name),
        rules=_path(table.get("rules"), base, f"{path}.rules"),
        token=token,
    )


def parse_config(raw: Mapping[str, Any], base: Path = Path("."), env: Mapping[str, str] | None = None) -> EngineConfig:
    env = os.environ if env is None else env
    _only(
        raw,
        {"seed", "endpoints", "tools", "reward", "grpo", "budget", "thresholds", "concurrency", "cassette", "assets"},
        "",
    )
    endpoints = _table(raw, "endpoints", "endpoints")
    _only(endpoints, {"policy", "verifier", "vqa", "detector", "depth"}, "endpoints")
    detector = _table(endpoints, "detector", "endpoints.detector")
    depth = _table(endpoints, "depth", "endpoints.depth")
    _only(detector, {"base_url"}, "endpoints.detector")
    _only(depth, {"base_url"}, "endpoints.depth")

    tools = _table(raw, "tools", "tools")
    _only(tools, {"backend", "scenes"}, "tools")

    reward = _table(raw, "reward", "reward")
    _only(reward, {"weights"}, "reward")
    try:
        weights = RewardWeights.from_mapping(_table(reward, "weights", "reward.weights"))
    except (InvalidWeights, TypeError) as exc:
        raise ConfigError("reward.weights", str(exc)) from None

    g = _table(raw, "grpo", "grpo")
    _only(g, {"epsilon", "beta", "group_size"}, "grpo")
    try:
        grpo = GrpoConfig(
            _number(g, "epsilon", 0.2, "grpo"), _number(g, "beta", 0.01, "grpo"), _number(g, "group_size", 5, "grpo", int)
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("grpo", str(exc)) from None

    b = _table(raw, "budget", "budget")
    _only(b, {f.name for f in fields(Budget)}, "budget")
    try:
        budget = Budget(
            _number(b, "max_steps", Budget.max_steps, "budget", int),
            _number(b, "max_tool_calls", Budget.max_tool_calls, "budget", int),
            _number(b, "max_wall", Budget.max_wall, "budget"),
            _number(b, "max_call_depth", Budget.max_call_depth, "budget", int),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("budget", str(exc)) from None

    t = _table(raw, "thresholds", "thresholds")
    _only(t, {f.name for f in fields(Thresholds)}, "thresholds")
    thresholds = Thresholds(**{f.name: _number(t, f.name, f.default, "thresholds") for f in fields(Thresholds)})

    c = _table(raw, "concurrency", "concurrency")
    _only(c, {"max_in_flight", "workers"}, "concurrency")
    cas = _table(raw, "cassette", "cassette")
    _only(cas, {"mode", "path"}, "cassette")
    assets = _table(raw, "assets", "assets")
    _only(assets, {"prompt_dir", "api_doc", "image_root"}, "assets")

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed", "must be an integer")

    cfg = EngineConfig(
        policy=_endpoint(endpoints, "policy", base, env),
        verifier=_endpoint(endpoints, "verifier", base, env),
        vqa=_endpoint(endpoints, "vqa", base, env),
        detector_url=detector.get("base_url", ""),
        depth_url=depth.get("base_url", ""),
        tools_backend=tools.get("backend", "mock"),
        scenes=_path(tools.get("scenes"), base, "tools.scenes"),
        weights=weights,
        grpo=grpo,
        budget=budget,
        thresholds=thresholds,
        max_in_flight=_number(c, "max_in_flight", 8, "concurrency", int),
        workers=_number(c, "workers", 4, "concurrency", int),
        cassette_mode=cas.get("mode", "off"),
        cassette=_path(cas.get("path"), base, "cassette.path"),
        seed=seed,
        prompt_dir=_path(assets.get("prompt_dir"), base, "assets.prompt_dir"),
        api_doc=_path(assets.get("api_doc"), base, "assets.api_doc"),
        image_root=_path(assets.get("image_root"), base, "assets.image_root"),
    )
    validate(cfg)
    return cfg


def validate(cfg: EngineConfig) -> None:
    if cfg.cassette_mode not in CASSETTE_MODES:
        raise ConfigError("cassette.mode", f"must be one of {CASSETTE_MODES}")
    if cfg.cassette_mode != "off" and cfg.cassette is None:
        raise ConfigError("cassette.path", f"required in {cfg.cassette_mode} mode")
    if cfg.cassette_mode == "replay" and cfg.cassette is not None and not cfg.cassette.is_file():
        raise ConfigError("cassette.path", f"{cfg.cassette} does not exist")
    if cfg.tools_backend not in TOOL_BACKENDS:
        raise ConfigError("tools.backend", f"must be one of {TOOL_BACKENDS}")
    for name in ("max_in_flight", "workers"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"concurrency.{name}", "must be >= 1")
    for f in fields(Thresholds):
        if not 0.0 <= getattr(cfg.thresholds, f.name) <= 1.0:
            raise ConfigError(f"thresholds.{f.name}", "must lie in [0, 1]")
    for name, p in (("tools.scenes", cfg.scenes), ("assets.api_doc", cfg.api_doc)):
        if p is not None and not p.is_file():
            raise ConfigError(name, f"{p} does not exist")
    for name, p in (("assets.prompt_dir", cfg.prompt_dir), ("assets.image_root", cfg.image_root)):
        if p is not None and not p.is_dir():
            raise ConfigError(name, f"{p} is not a directory")
    for role in ("policy", "verifier", "vqa"):
        ep: Endpoint = getattr(cfg, role)
        path = f"endpoints.{role}"
        if ep.backend not in CHAT_BACKENDS:
            raise ConfigError(f"{path}.backend", f"must be one of {CHAT_BACKENDS}")
        if not ep.model:
            raise ConfigError(f"{path}.model", "must be non-empty")
        if ep.rules is not None and not ep.rules.is_file():
            raise ConfigError(f"{path}.rules", f"{ep.rules} does not exist")
    if cfg.cassette_mode == "replay":
        return
    if cfg.tools_backend == "mock" and cfg.scenes is None:
        raise ConfigError("tools.scenes", "required by the mock tool backend")
    if cfg.tools_backend == "http":
        if not cfg.detector_url:
            raise ConfigError("endpoints.detector.base_url", "required by the http tool backend")
        if not cfg.depth_url:
            raise ConfigError("endpoints.depth.base_url", "required by the http tool backend")
    roles = ("policy", "verifier") + (("vqa",) if cfg.tools_backend == "http" else ())
    for role in roles:
        ep = getattr(cfg, role)
        if ep.backend == "http" and not ep.base_url:
            raise ConfigError(f"endpoints.{role}.base_url", "required by the http chat backend")
        if ep.backend == "rules" and ep.rules is None:
            raise ConfigError(f"endpoints.{role}.rules", "required by the rules chat backend")


def load_config(path: str | Path | None = None, env: Mapping[str, str] | None = None) -> EngineConfig:
    """Read ``path`` (or defaults when None), apply environment secrets, validate."""
    if path is None:
        return parse_config({}, Path("."), env)
    p = Path(path)
    try:
        raw = tomllib.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {p}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"{p} is not valid TOML: {exc}") from None
    return parse_config(raw, p.parent, env)
