"""Abstract syntax of tool programs.

Nodes are frozen dataclasses; source spans are excluded from equality so two
trees compare equal exactly when they are structurally identical.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from visreason.toolprog.lexer import NO_SPAN, Span


def _span() -> Span:
    return field(default=NO_SPAN, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Node:
    span: Span = _span()


# --- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Num(Node):
    value: float = 0.0


@dataclass(frozen=True)
class Str(Node):
    value: str = ""


@dataclass(frozen=True)
class Bool(Node):
    value: bool = False


@dataclass(frozen=True)
class NoneLit(Node):
    pass


@dataclass(frozen=True)
class ListLit(Node):
    items: tuple["Expr", ...] = ()


@dataclass(frozen=True)
class DictLit(Node):
    items: tuple[tuple["Expr", "Expr"], ...] = ()


@dataclass(frozen=True)
class Name(Node):
    id: str = ""


@dataclass(frozen=True)
class Subscript(Node):
    value: "Expr" = None  # type: ignore[assignment]
    index: "Expr" = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Call(Node):
    func: str = ""
    args: tuple["Expr", ...] = ()
    keywords: tuple[tuple[str, "Expr"], ...] = ()


@dataclass(frozen=True)
class MethodCall(Node):
    obj: "Expr" = None  # type: ignore[assignment]
    method: str = ""
    args: tuple["Expr", ...] = ()


@dataclass(frozen=True)
class Unary(Node):
    op: str = "-"
    operand: "Expr" = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Binary(Node):
    op: str = "+"
    left: "Expr" = None  # type: ignore[assignment]
    right: "Expr" = None  # type: ignore[assignment]


@dataclass(frozen=True)
class BoolOp(Node):
    op: str = "and"
    values: tuple["Expr", ...] = ()


@dataclass(frozen=True)
class Compare(Node):
    left: "Expr" = None  # type: ignore[assignment]
    ops: tuple[str, ...] = ()
    comparators: tuple["Expr", ...] = ()


Expr = Union[Num, Str, Bool, NoneLit, ListLit, DictLit, Name, Subscript, Call, MethodCall, Unary, Binary, BoolOp, Compare]


@dataclass(frozen=True)
class TupleTarget(Node):
    elts: tuple[Union[Name, Subscript], ...] = ()


Target = Union[Name, Subscript, TupleTarget]


# --- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Assign(Node):
    target: Target = None  # type: ignore[assignment]
    value: Expr = None  # type: ignore[assignment]


@dataclass(frozen=True)
class AugAssign(Node):
    target: Union[Name, Subscript] = None  # type: ignore[assignment]
    op: str = "+"
    value: Expr = None  # type: ignore[assignment]


@dataclass(frozen=True)
class For(Node):
    target: Union[Name, TupleTarget] = None  # type: ignore[assignment]
    iter: Expr = None  # type: ignore[assignment]
    body: tuple["Stmt", ...] = ()


@dataclass(frozen=True)
class While(Node):
    test: Expr = None  # type: ignore[assignment]
    body: tuple["Stmt", ...] = ()


@dataclass(frozen=True)
class If(Node):
    """``if``/``elif`` chain: ``branches`` holds (test, body) pairs in order."""

    branches: tuple[tuple[Expr, tuple["Stmt", ...]], ...] = ()
    orelse: Optional[tuple["Stmt", ...]] = None


@dataclass(frozen=True)
class FunctionDef(Node):
    name: str = ""
    params: tuple[str, ...] = ()
    body: tuple["Stmt", ...] = ()


@dataclass(frozen=True)
class Return(Node):
    value: Optional[Expr] = None


@dataclass(frozen=True)
class Break(Node):
    pass


@dataclass(frozen=True)
class Continue(Node):
    pass


@dataclass(frozen=True)
class ExprStmt(Node):
    value: Expr = None  # type: ignore[assignment]


Stmt = Union[Assign, AugAssign, For, While, If, FunctionDef, Return, Break, Continue, ExprStmt]


@dataclass(frozen=True)
class Program(Node):
    body: tuple[Stmt, ...] = ()


def children(node: Node) -> Iterator[Node]:
    """Direct child nodes in source order."""
    for f in dataclasses.fields(node):
        if f.name == "span":
            continue
        yield from _nodes_in(getattr(node, f.name))


def _nodes_in(value: object) -> Iterator[Node]:
    if isinstance(value, Node):
        yield value
    elif isinstance(value, tuple):
        for item in value:
            yield from _nodes_in(item)


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal, which is source order for this grammar."""
    yield node
    for child in children(node):
        yield from walk(child)
