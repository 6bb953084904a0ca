"""The fixed namespace visible to every tool program."""

from __future__ import annotations

TOOL_NAMES = frozenset({"gd_detect", "depth", "vqa"})
DETECT_TOOL = "gd_detect"
BUILTIN_NAMES = frozenset(
    {"len", "min", "max", "abs", "float", "int", "round", "sum", "sorted", "range", "enumerate", "str"}
)
PREBOUND_NAMES = frozenset({"img_pth"})
ANSWER_NAME = "final_answer"
