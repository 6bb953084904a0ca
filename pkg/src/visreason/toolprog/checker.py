"""Static checks that run without executing a program."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from visreason.toolprog import nodes as n
from visreason.toolprog.lexer import Span
from visreason.toolprog.names import ANSWER_NAME, BUILTIN_NAMES, PREBOUND_NAMES, TOOL_NAMES


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    span: Span

    def to_json(self) -> dict:
        return {"severity": self.severity, "message": self.message, "span": self.span.to_json()}


class _Scope:
    def __init__(self, body: Iterable[n.Stmt], params: tuple[str, ...] = (), parent: Optional["_Scope"] = None) -> None:
        self.parent = parent
        self.bound: set[str] = set(params)
        self.functions: set[str] = set()
        _collect_bindings(body, self)

    def binds(self, name: str) -> bool:
        scope: Optional[_Scope] = self
        while scope is not None:
            if name in scope.bound:
                return True
            scope = scope.parent
        return False

    def defines_function(self, name: str) -> bool:
        scope: Optional[_Scope] = self
        while scope is not None:
            if name in scope.functions:
                return True
            scope = scope.parent
        return False


def _target_names(target: n.Target) -> list[str]:
    if isinstance(target, n.Name):
        return [target.id]
    if isinstance(target, n.TupleTarget):
        return [t.id for t in target.elts if isinstance(t, n.Name)]
    return []


def _collect_bindings(body: Iterable[n.Stmt], scope: _Scope) -> None:
    """Names bound anywhere in this scope, not descending into nested functions."""
    for s in body:
        if isinstance(s, n.Assign):
            scope.bound.update(_target_names(s.target))
        elif isinstance(s, n.For):
            scope.bound.update(_target_names(s.target))
            _collect_bindings(s.body, scope)
        elif isinstance(s, n.While):
            _collect_bindings(s.body, scope)
        elif isinstance(s, n.If):
            for _, b in s.branches:
                _collect_bindings(b, scope)
            if s.orelse:
                _collect_bindings(s.orelse, scope)
        elif isinstance(s, n.FunctionDef):
            scope.bound.add(s.name)
            scope.functions.add(s.name)


class _Checker:
    def __init__(self) -> None:
        self.diags: list[Diagnostic] = []

    def err(self, message: str, span: Span) -> None:
        self.diags.append(Diagnostic("error", message, span))

    def block(self, body: Iterable[n.Stmt], scope: _Scope, in_loop: bool) -> None:
        for s in body:
            self.stmt(s, scope, in_loop)

    def stmt(self, s: n.Stmt, scope: _Scope, in_loop: bool) -> None:
        if isinstance(s, n.Assign):
            self.expr(s.value, scope)
            self.store(s.target, scope)
        elif isinstance(s, n.AugAssign):
            self.expr(s.value, scope)
            self.expr(s.target, scope)
        elif isinstance(s, n.ExprStmt):
            self.expr(s.value, scope)
        elif isinstance(s, n.Return):
            if s.value is not None:
                self.expr(s.value, scope)
        elif isinstance(s, (n.Break, n.Continue)):
            if not in_loop:
                self.err(f"'{'break' if isinstance(s, n.Break) else 'continue'}' outside loop", s.span)
        elif isinstance(s, n.For):
            self.expr(s.iter, scope)
            self.block(s.body, scope, True)
        elif isinstance(s, n.While):
            self.expr(s.test, scope)
            self.block(s.body, scope, True)
        elif isinstance(s, n.If):
            for test, body in s.branches:
                self.expr(test, scope)
                self.block(body, scope, in_loop)
            if s.orelse:
                self.block(s.orelse, scope, in_loop)
        elif isinstance(s, n.FunctionDef):
            self.block(s.body, _Scope(s.body, s.params, scope), False)

    def store(self, target: n.Target, scope: _Scope) -> None:
        if isinstance(target, n.Subscript):
            self.expr(target, scope)
        elif isinstance(target, n.TupleTarget):
            for t in target.elts:
                self.store(t, scope)

    def expr(self, e: n.Expr, scope: _Scope) -> None:
        if isinstance(e, n.Name):
            if not (e.id in PREBOUND_NAMES or e.id in BUILTIN_NAMES or e.id in TOOL_NAMES or scope.binds(e.id)):
                self.err(f"name {e.id!r} is never bound", e.span)
            return
        if isinstance(e, n.Call):
            if not (e.func in TOOL_NAMES or e.func in BUILTIN_NAMES or scope.defines_function(e.func)):
                self.err(f"unknown callable {e.func}", e.span)
        for child in n.children(e):
            self.expr(child, scope)


def static_check(program: n.Program) -> list[Diagnostic]:
    """Errors for unbound names, unknown callables and stray break/continue;
    a warning when ``final_answer`` is never assigned at top level."""
    checker = _Checker()
    top = _Scope(program.body)
    checker.block(program.body, top, False)
    diags = sorted(checker.diags, key=lambda d: (d.span.start, d.span.end))
    if ANSWER_NAME not in top.bound:
        diags.append(Diagnostic("warning", f"{ANSWER_NAME} never assigned", program.span))
    return diags
