"""Canonical source printer; ``parse_program(pretty_print(p)) == p`` for every parsed ``p``."""

from __future__ import annotations

import math

from visreason.toolprog import nodes as n

INDENT = "    "

# binding strength; larger binds tighter
_OR, _AND, _NOT, _CMP, _ARITH, _TERM, _UNARY, _POW, _ATOM = range(1, 10)
_BINARY_LEVEL = {"+": _ARITH, "-": _ARITH, "*": _TERM, "/": _TERM, "//": _TERM, "%": _TERM, "**": _POW}
_STR_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def format_number(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"non-finite literal {value!r}")
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def format_string(value: str) -> str:
    out = []
    for ch in value:
        if ch in _STR_ESCAPES:
            out.append(_STR_ESCAPES[ch])
        elif ch.isprintable():
            out.append(ch)
        else:
            code = ord(ch)
            out.append(f"\\x{code:02x}" if code < 0x100 else f"\\u{code:04x}" if code < 0x10000 else f"\\U{code:08x}")
    return '"' + "".join(out) + '"'


def _level(e: n.Expr) -> int:
    if isinstance(e, n.BoolOp):
        return _OR if e.op == "or" else _AND
    if isinstance(e, n.Unary):
        return _NOT if e.op == "not" else _UNARY
    if isinstance(e, n.Compare):
        return _CMP
    if isinstance(e, n.Binary):
        return _BINARY_LEVEL[e.op]
    return _ATOM


def expr_to_source(e: n.Expr, min_level: int = 0) -> str:
    text = _expr(e)
    return f"({text})" if _level(e) < min_level else text


def _expr(e: n.Expr) -> str:
    if isinstance(e, n.Num):
        return format_number(e.value)
    if isinstance(e, n.Str):
        return format_string(e.value)
    if isinstance(e, n.Bool):
        return "True" if e.value else "False"
    if isinstance(e, n.NoneLit):
        return "None"
    if isinstance(e, n.Name):
        return e.id
    if isinstance(e, n.ListLit):
        return "[" + ", ".join(expr_to_source(i) for i in e.items) + "]"
    if isinstance(e, n.DictLit):
        return "{" + ", ".join(f"{expr_to_source(k)}: {expr_to_source(v)}" for k, v in e.items) + "}"
    if isinstance(e, n.Subscript):
        return f"{expr_to_source(e.value, _ATOM)}[{expr_to_source(e.index)}]"
    if isinstance(e, n.Call):
        parts = [expr_to_source(a) for a in e.args] + [f"{k}={expr_to_source(v)}" for k, v in e.keywords]
        return f"{e.func}({', '.join(parts)})"
    if isinstance(e, n.MethodCall):
        obj = expr_to_source(e.obj, _ATOM)
        if isinstance(e.obj, n.Num):
            obj = f"({obj})"  # "1.lower()" would lex as a malformed number
        return f"{obj}.{e.method}({', '.join(expr_to_source(a) for a in e.args)})"
    if isinstance(e, n.Unary):
        if e.op == "not":
            return "not " + expr_to_source(e.operand, _NOT)
        return e.op + expr_to_source(e.operand, _UNARY)
    if isinstance(e, n.Binary):
        level = _BINARY_LEVEL[e.op]
        if e.op == "**":
            return f"{expr_to_source(e.left, _ATOM)} ** {expr_to_source(e.right, _UNARY)}"
        return f"{expr_to_source(e.left, level)} {e.op} {expr_to_source(e.right, level + 1)}"
    if isinstance(e, n.BoolOp):
        level = _level(e)
        return f" {e.op} ".join(expr_to_source(v, level + 1) for v in e.values)
    if isinstance(e, n.Compare):
        parts = [expr_to_source(e.left, _ARITH)]
        for op, comp in zip(e.ops, e.comparators):
            parts.append(f"{op} {expr_to_source(comp, _ARITH)}")
        return " ".join(parts)
    raise TypeError(f"not an expression node: {type(e).__name__}")


def _target(t: n.Target) -> str:
    if isinstance(t, n.TupleTarget):
        return ", ".join(expr_to_source(x) for x in t.elts)
    return expr_to_source(t)


def _block(body: tuple[n.Stmt, ...], depth: int, out: list[str]) -> None:
    for stmt in body:
        _stmt(stmt, depth, out)


def _stmt(s: n.Stmt, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    if isinstance(s, n.Assign):
        out.append(f"{pad}{_target(s.target)} = {expr_to_source(s.value)}")
    elif isinstance(s, n.AugAssign):
        out.append(f"{pad}{_target(s.target)} {s.op}= {expr_to_source(s.value)}")
    elif isinstance(s, n.ExprStmt):
        out.append(pad + expr_to_source(s.value))
    elif isinstance(s, n.Return):
        out.append(pad + ("return" if s.value is None else "return " + expr_to_source(s.value)))
    elif isinstance(s, n.Break):
        out.append(pad + "break")
    elif isinstance(s, n.Continue):
        out.append(pad + "continue")
    elif isinstance(s, n.For):
        out.append(f"{pad}for {_target(s.target)} in {expr_to_source(s.iter)}:")
        _block(s.body, depth + 1, out)
    elif isinstance(s, n.While):
        out.append(f"{pad}while {expr_to_source(s.test)}:")
        _block(s.body, depth + 1, out)
    elif isinstance(s, n.If):
        for i, (test, body) in enumerate(s.branches):
            out.append(f"{pad}{'if' if i == 0 else 'elif'} {expr_to_source(test)}:")
            _block(body, depth + 1, out)
        if s.orelse is not None:
            out.append(f"{pad}else:")
            _block(s.orelse, depth + 1, out)
    elif isinstance(s, n.FunctionDef):
        out.append(f"{pad}def {s.name}({', '.join(s.params)}):")
        _block(s.body, depth + 1, out)
    else:
        raise TypeError(f"not a statement node: {type(s).__name__}")


def pretty_print(program: n.Program) -> str:
    """Four-space indents, one statement per line, no trailing newline."""
    out: list[str] = []
    _block(program.body, 0, out)
    return "\n".join(out)
