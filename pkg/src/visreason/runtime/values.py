"""Value universe of the interpreter and its errors.

Numbers are Python floats (bool is kept distinct), text is ``str``, lists are
``list``, mappings are ``dict`` with text keys, ``None`` is none, and callables
are :class:`Function` closures or :class:`Builtin` wrappers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from visreason.toolprog.lexer import NO_SPAN, Span
from visreason.toolprog import nodes as n


class ProgramRuntimeError(RuntimeError):
    """A failure raised while executing a program.

    ``kind`` is one of: undefined_name, type_mismatch, division_by_zero,
    index_out_of_range, key_error, value_error, overflow, invalid_control_flow,
    budget_exceeded, tool_error. ``detail`` names the exhausted budget for
    budget_exceeded (steps, tool_calls, wall, depth).
    """

    def __init__(self, kind: str, message: str, span: Span = NO_SPAN, detail: str | None = None) -> None:
        super().__init__(message)
        self.kind = kind
        self.message = message
        self.span = span
        self.detail = detail

    def __str__(self) -> str:
        where = f" (line {self.span.line}, col {self.span.col})" if self.span.line else ""
        return f"{self.kind}: {self.message}{where}"

    def info(self) -> "ErrorInfo":
        return ErrorInfo(self.kind, self.message, self.span.line, self.span.col, self.detail)


@dataclass(frozen=True)
class ErrorInfo:
    kind: str
    message: str
    line: int = 0
    col: int = 0
    detail: Optional[str] = None

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "detail": self.detail, "message": self.message, "line": self.line, "col": self.col}


@dataclass(eq=True)
class Function:
    name: str
    params: tuple[str, ...]
    body: tuple[n.Stmt, ...]
    local_names: frozenset[str]
    env: Any = field(compare=False, repr=False)


@dataclass(frozen=True)
class Builtin:
    name: str
    fn: Callable[..., Any] = field(compare=False)
    accepts_key: bool = False


def is_number(v: object) -> bool:
    return isinstance(v, float)


def is_callable(v: object) -> bool:
    return isinstance(v, (Function, Builtin))


def type_name(v: object) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, float):
        return "number"
    if isinstance(v, str):
        return "text"
    if isinstance(v, list):
        return "list"
    if isinstance(v, dict):
        return "mapping"
    if is_callable(v):
        return "callable"
    return type(v).__name__


def values_equal(a: object, b: object) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    if isinstance(a, float) or isinstance(b, float):
        return isinstance(a, float) and isinstance(b, float) and a == b
    if isinstance(a, list):
        return isinstance(b, list) and len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict):
        return (
            isinstance(b, dict)
            and a.keys() == b.keys()
            and all(values_equal(a[k], b[k]) for k in a)
        )
    if a is None or b is None:
        return a is b
    if isinstance(a, str):
        return isinstance(b, str) and a == b
    return a is b


def from_host(obj: Any) -> Any:
    """Convert a host object (tool output, fixture JSON) into a DSL value."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, float)):
        return float(obj)
    if isinstance(obj, (list, tuple)):
        return [from_host(x) for x in obj]
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            if not isinstance(k, str):
                raise TypeError(f"mapping keys must be text, got {k!r}")
            out[k] = from_host(v)
        return out
    raise TypeError(f"no DSL value for host object of type {type(obj).__name__}")


def format_number(x: float) -> str:
    if math.isfinite(x) and x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def to_text(v: object, nested: bool = False) -> str:
    """What ``str(v)`` produces inside a program."""
    if isinstance(v, bool):
        return "True" if v else "False"
    if v is None:
        return "None"
    if isinstance(v, float):
        return format_number(v)
    if isinstance(v, str):
        return repr(v) if nested else v
    if isinstance(v, list):
        return "[" + ", ".join(to_text(x, True) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k!r}: {to_text(x, True)}" for k, x in v.items()) + "}"
    if isinstance(v, Function):
        return f"<function {v.name}>"
    if isinstance(v, Builtin):
        return f"<builtin {v.name}>"
    return repr(v)


def to_json(v: object) -> Any:
    """JSON-safe encoding; non-finite numbers and callables get tagged objects."""
    if isinstance(v, float) and not math.isfinite(v):
        return {"$number": repr(v)}
    if v is None or isinstance(v, (bool, float, str)):
        return v
    if isinstance(v, list):
        return [to_json(x) for x in v]
    if isinstance(v, dict):
        return {k: to_json(x) for k, x in v.items()}
    if isinstance(v, Function):
        return {"$function": v.name}
    if isinstance(v, Builtin):
        return {"$builtin": v.name}
    raise TypeError(f"cannot encode {type(v).__name__}")
