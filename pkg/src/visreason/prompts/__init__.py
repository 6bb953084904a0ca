"""Versioned prompt templates with named placeholders.

Templates contain literal JSON braces, so substitution only touches the
declared ``{name}`` placeholders instead of going through ``str.format``.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from pathlib import Path

PROMPT_VERSION = "1"

FIELDS: dict[str, tuple[str, ...]] = {
    "logic": ("query", "plan", "api"),
    "spatial": ("query", "plan", "api"),
    "attribute": ("query", "plan", "api"),
    "code": ("plan", "code", "api"),
    "query_generation": (),
    "judge": ("question", "gold", "pred"),
    "coarse": (),
    "per_crop": (),
    "dedup": (),
    "system": ("api", "icl"),
    "api": (),
}


class TemplateError(KeyError):
    pass


@lru_cache(maxsize=None)
def _packaged(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.txt").read_text(encoding="utf-8")


def load(name: str, directory: str | Path | None = None) -> str:
    """Template text, from ``directory`` when given (an override set) or the packaged assets."""
    if name not in FIELDS:
        raise TemplateError(f"unknown prompt template {name!r}")
    if directory is not None:
        return (Path(directory) / f"{name}.txt").read_text(encoding="utf-8")
    return _packaged(name)


def render(name: str, directory: str | Path | None = None, **values: str) -> str:
    declared = FIELDS.get(name)
    if declared is None:
        raise TemplateError(f"unknown prompt template {name!r}")
    if set(values) != set(declared):
        raise TemplateError(f"template {name!r} takes {sorted(declared)}, got {sorted(values)}")
    text = load(name, directory)
    if not declared:
        return text
    pattern = re.compile(r"\{(" + "|".join(map(re.escape, declared)) + r")\}")
    return pattern.sub(lambda m: values[m.group(1)], text)
