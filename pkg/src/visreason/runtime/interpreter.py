"""Tree-walking interpreter with tool dispatch and execution budgets."""

from __future__ import annotations

import math
import operator
import time
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from visreason.geometry import BBox, InvalidBox
from visreason.runtime.builtins import BUILTINS, check_key, ordering_key
from visreason.runtime.values import (
    Builtin,
    ErrorInfo,
    Function,
    ProgramRuntimeError,
    from_host,
    is_callable,
    is_number,
    to_json,
    to_text,
    type_name,
    values_equal,
)
from visreason.toolprog import nodes as n
from visreason.toolprog.lexer import NO_SPAN, Span
from visreason.toolprog.names import ANSWER_NAME, TOOL_NAMES
from visreason.tools.providers import REASONING_BOX_THRESHOLD, REASONING_TEXT_THRESHOLD, ToolProvider
from visreason.tools.types import EmptyPrompt, ImageHandle, OutOfBounds, ProviderError

COMPLETED = "completed"
HALTED = "halted_by_return"
ERROR = "error"


@dataclass(frozen=True)
class Budget:
    max_steps: int = 100_000
    max_tool_calls: int = 64
    max_wall: float = 120.0
    max_call_depth: int = 32

    def __post_init__(self) -> None:
        for name in ("max_steps", "max_tool_calls", "max_wall", "max_call_depth"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class ToolCall:
    tool: str
    args: dict[str, Any]
    result: Any
    error: Optional[str] = None
    wall: float = field(default=0.0, compare=False)

    def to_json(self) -> dict[str, Any]:
        out = {"tool": self.tool, "args": self.args, "result": self.result}
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass
class ExecutionResult:
    status: str
    bindings: dict[str, Any]
    trace: list[ToolCall]
    steps_used: int
    tool_calls_used: int
    error: Optional[ErrorInfo] = None

    @property
    def ok(self) -> bool:
        return self.status in (COMPLETED, HALTED)

    def to_json(self) -> dict[str, Any]:
        return {
            "status": self.status,
            "bindings": {k: to_json(v) for k, v in self.bindings.items()},
            "trace": [c.to_json() for c in self.trace],
            "steps_used": self.steps_used,
            "tool_calls_used": self.tool_calls_used,
            "error": self.error.to_json() if self.error else None,
        }


class MissingAnswer(LookupError):
    pass


class ToolBridge:
    """Maps the three program-level tools onto a :class:`ToolProvider`.

    Programs pass ``img_pth`` (a text reference); ``images`` resolves it to
    pixels.
    """

    def __init__(
        self,
        provider: ToolProvider,
        images: Mapping[str, ImageHandle],
        box_threshold: float = REASONING_BOX_THRESHOLD,
        text_threshold: float = REASONING_TEXT_THRESHOLD,
    ) -> None:
        self.provider = provider
        self.images = dict(images)
        self.box_threshold = box_threshold
        self.text_threshold = text_threshold

    def image(self, ref: Any, span: Span) -> ImageHandle:
        if not isinstance(ref, str):
            raise ProgramRuntimeError("type_mismatch", f"image argument must be text, got {type_name(ref)}", span)
        try:
            return self.images[ref]
        except KeyError:
            raise ProgramRuntimeError("tool_error", f"unknown image {ref!r}", span) from None


def _bbox(value: Any, span: Span) -> BBox:
    if not isinstance(value, list) or len(value) != 4 or not all(is_number(x) for x in value):
        raise ProgramRuntimeError("type_mismatch", f"bbox must be a list of 4 numbers, got {to_text(value)}", span)
    try:
        return BBox(*value)
    except InvalidBox as exc:
        raise ProgramRuntimeError("value_error", f"invalid bbox: {exc}", span) from None


def _text(name: str, value: Any, span: Span) -> str:
    if not isinstance(value, str):
        raise ProgramRuntimeError("type_mismatch", f"{name} must be text, got {type_name(value)}", span)
    return value


class _Return(Exception):
    def __init__(self, value: Any, span: Span) -> None:
        self.value = value
        self.span = span


class _Break(Exception):
    def __init__(self, span: Span) -> None:
        self.span = span


class _Continue(_Break):
    pass


class Frame:
    __slots__ = ("vars", "local_names", "parent")

    def __init__(self, local_names: Optional[frozenset[str]], parent: Optional["Frame"]) -> None:
        self.vars: dict[str, Any] = {}
        self.local_names = local_names
        self.parent = parent


def assigned_names(body: tuple[n.Stmt, ...]) -> frozenset[str]:
    """Names a function body binds, which are local to each call."""
    out: set[str] = set()

    def targets(t: n.Target) -> None:
        if isinstance(t, n.Name):
            out.add(t.id)
        elif isinstance(t, n.TupleTarget):
            for x in t.elts:
                targets(x)

    def visit(stmts: tuple[n.Stmt, ...]) -> None:
        for s in stmts:
            if isinstance(s, (n.Assign, n.AugAssign)):
                targets(s.target)
            elif isinstance(s, n.For):
                targets(s.target)
                visit(s.body)
            elif isinstance(s, n.While):
                visit(s.body)
            elif isinstance(s, n.If):
                for _, b in s.branches:
                    visit(b)
                if s.orelse:
                    visit(s.orelse)
            elif isinstance(s, n.FunctionDef):
                out.add(s.name)

    visit(body)
    return frozenset(out)


_ARITH = {
    "-": operator.sub,
    "*": operator.mul,
    "/": operator.truediv,
    "//": operator.floordiv,
    "%": operator.mod,
    "**": operator.pow,
}
_ORDER = {"<": operator.lt, ">": operator.gt, "<=": operator.le, ">=": operator.ge}
_WALL_CHECK_EVERY = 1024


class Interpreter:
    """One execution of one program. Not shared across threads."""

    def __init__(self, tools: ToolBridge | None, budget: Budget = Budget()) -> None:
        self.tools = tools
        self.budget = budget
        self.steps = 0
        self.trace: list[ToolCall] = []
        self.depth = 0
        self._t0 = time.monotonic()
        self._namespace: dict[str, Any] = dict(BUILTINS)
        for name in TOOL_NAMES:
            self._namespace[name] = Builtin(name, getattr(self, f"_tool_{name}"))

    # --- budgets ---------------------------------------------------------------

    def charge(self, amount: int = 1, span: Span = NO_SPAN) -> None:
        if self.steps + amount > self.budget.max_steps:
            self.steps = self.budget.max_steps
            raise ProgramRuntimeError(
                "budget_exceeded", f"step budget of {self.budget.max_steps} exhausted", span, detail="steps"
            )
        before = self.steps
        self.steps += amount
        if self.steps // _WALL_CHECK_EVERY != before // _WALL_CHECK_EVERY:
            self._check_wall(span)

    def _check_wall(self, span: Span) -> None:
        if time.monotonic() - self._t0 > self.budget.max_wall:
            raise ProgramRuntimeError(
                "budget_exceeded", f"wall-time budget of {self.budget.max_wall}s exhausted", span, detail="wall"
            )

    # --- entry point -------------------------------------------------------------

    def run(self, program: n.Program, bindings: Mapping[str, Any]) -> ExecutionResult:
        self._t0 = time.monotonic()
        frame = Frame(None, None)
        frame.vars.update({k: from_host(v) for k, v in bindings.items()})
        status, error = COMPLETED, None
        try:
            self.block(program.body, frame)
        except _Return:
            status = HALTED
        except _Break as sig:
            kind = "continue" if isinstance(sig, _Continue) else "break"
            status, error = ERROR, ProgramRuntimeError("invalid_control_flow", f"'{kind}' outside loop", sig.span).info()
        except ProgramRuntimeError as exc:
            status, error = ERROR, exc.info()
        except RecursionError:
            status = ERROR
            error = ProgramRuntimeError("budget_exceeded", "evaluation nested too deeply", detail="depth").info()
        return ExecutionResult(status, frame.vars, self.trace, self.steps, len(self.trace), error)

    # --- statements --------------------------------------------------------------

    def block(self, body: tuple[n.Stmt, ...], frame: Frame) -> None:
        for s in body:
            self.charge(1, s.span)
            self._STMT[type(s)](self, s, frame)

    def _assign(self, s: n.Assign, frame: Frame) -> None:
        self.store(s.target, self.eval(s.value, frame), frame)

    def _augassign(self, s: n.AugAssign, frame: Frame) -> None:
        current = self.eval(s.target, frame)
        value = self.eval(s.value, frame)
        self.store(s.target, self.binary(s.op, current, value, s.span), frame)

    def _exprstmt(self, s: n.ExprStmt, frame: Frame) -> None:
        self.eval(s.value, frame)

    def _return(self, s: n.Return, frame: Frame) -> None:
        raise _Return(None if s.value is None else self.eval(s.value, frame), s.span)

    def _break(self, s: n.Break, frame: Frame) -> None:
        raise _Break(s.span)

    def _continue(self, s: n.Continue, frame: Frame) -> None:
        raise _Continue(s.span)

    def _for(self, s: n.For, frame: Frame) -> None:
        iterable = self.eval(s.iter, frame)
        if isinstance(iterable, list):
            items = list(iterable)
        elif isinstance(iterable, str):
            items = list(iterable)
        elif isinstance(iterable, dict):
            items = list(iterable.keys())
        else:
            raise ProgramRuntimeError("type_mismatch", f"cannot iterate over {type_name(iterable)}", s.iter.span)
        for item in items:
            self.charge(1, s.span)
            self.store(s.target, item, frame)
            try:
                self.block(s.body, frame)
            except _Continue:
                continue
            except _Break:
                break

    def _while(self, s: n.While, frame: Frame) -> None:
        while self.condition(s.test, frame):
            try:
                self.block(s.body, frame)
            except _Continue:
                continue
            except _Break:
                break

    def _if(self, s: n.If, frame: Frame) -> None:
        for test, body in s.branches:
            if self.condition(test, frame):
                self.block(body, frame)
                return
        if s.orelse is not None:
            self.block(s.orelse, frame)

    def _def(self, s: n.FunctionDef, frame: Frame) -> None:
        frame.vars[s.name] = Function(s.name, s.params, s.body, assigned_names(s.body) | set(s.params), frame)

    _STMT = {
        n.Assign: _assign,
        n.AugAssign: _augassign,
        n.ExprStmt: _exprstmt,
        n.Return: _return,
        n.Break: _break,
        n.Continue: _continue,
        n.For: _for,
        n.While: _while,
        n.If: _if,
        n.FunctionDef: _def,
    }

    def condition(self, test: n.Expr, frame: Frame) -> bool:
        value = self.eval(test, frame)
        if not isinstance(value, bool):
            raise ProgramRuntimeError(
                "type_mismatch", f"condition must be a boolean, got {type_name(value)}", test.span
            )
        return value

    def store(self, target: n.Target, value: Any, frame: Frame) -> None:
        if isinstance(target, n.Name):
            frame.vars[target.id] = value
        elif isinstance(target, n.Subscript):
            container = self.eval(target.value, frame)
            index = self.eval(target.index, frame)
            if isinstance(container, list):
                container[self._list_index(container, index, target.span)] = value
            elif isinstance(container, dict):
                if not isinstance(index, str):
                    raise ProgramRuntimeError("type_mismatch", "mapping keys must be text", target.index.span)
                container[index] = value
            else:
                raise ProgramRuntimeError(
                    "type_mismatch", f"cannot assign into {type_name(container)}", target.value.span
                )
        else:
            if not isinstance(value, list):
                raise ProgramRuntimeError("type_mismatch", f"cannot unpack {type_name(value)}", target.span)
            if len(value) != len(target.elts):
                raise ProgramRuntimeError(
                    "type_mismatch", f"cannot unpack {len(value)} values into {len(target.elts)} names", target.span
                )
            for t, v in zip(target.elts, value):
                self.store(t, v, frame)

    # --- expressions -------------------------------------------------------------

    def eval(self, e: n.Expr, frame: Frame) -> Any:
        self.charge(1, e.span)
        return self._EXPR[type(e)](self, e, frame)

    def _num(self, e: n.Num, frame: Frame) -> Any:
        return float(e.value)

    def _str(self, e: n.Str, frame: Frame) -> Any:
        return e.value

    def _bool(self, e: n.Bool, frame: Frame) -> Any:
        return e.value

    def _none(self, e: n.NoneLit, frame: Frame) -> Any:
        return None

    def _list(self, e: n.ListLit, frame: Frame) -> Any:
        return [self.eval(x, frame) for x in e.items]

    def _dict(self, e: n.DictLit, frame: Frame) -> Any:
        out: dict[str, Any] = {}
        for k, v in e.items:
            key = self.eval(k, frame)
            if not isinstance(key, str):
                raise ProgramRuntimeError("type_mismatch", f"mapping keys must be text, got {type_name(key)}", k.span)
            out[key] = self.eval(v, frame)
        return out

    def lookup(self, name: str, span: Span, frame: Frame) -> Any:
        f: Optional[Frame] = frame
        while f is not None:
            if name in f.vars:
                return f.vars[name]
            if f.local_names is not None and name in f.local_names:
                raise ProgramRuntimeError("undefined_name", f"local name {name!r} used before assignment", span)
            f = f.parent
        if name in self._namespace:
            return self._namespace[name]
        raise ProgramRuntimeError("undefined_name", f"name {name!r} is not defined", span)

    def _name(self, e: n.Name, frame: Frame) -> Any:
        return self.lookup(e.id, e.span, frame)

    def _list_index(self, container: list, index: Any, span: Span) -> int:
        if not is_number(index) or not math.isfinite(index) or index != int(index):
            raise ProgramRuntimeError("type_mismatch", f"list index must be a whole number, got {to_text(index)}", span)
        i = int(index)
        if not -len(container) <= i < len(container):
            raise ProgramRuntimeError("index_out_of_range", f"index {i} out of range for length {len(container)}", span)
        return i

    def _subscript(self, e: n.Subscript, frame: Frame) -> Any:
        container = self.eval(e.value, frame)
        index = self.eval(e.index, frame)
        if isinstance(container, (list, str)):
            return container[self._list_index(container, index, e.index.span)]  # type: ignore[arg-type]
        if isinstance(container, dict):
            if not isinstance(index, str):
                raise ProgramRuntimeError("type_mismatch", "mapping keys must be text", e.index.span)
            if index not in container:
                raise ProgramRuntimeError("key_error", f"key {index!r} not found", e.index.span)
            return container[index]
        raise ProgramRuntimeError("type_mismatch", f"cannot subscript {type_name(container)}", e.value.span)

    def _call(self, e: n.Call, frame: Frame) -> Any:
        fn = self.lookup(e.func, e.span, frame)
        args = [self.eval(a, frame) for a in e.args]
        key = self.eval(e.keywords[0][1], frame) if e.keywords else None
        return self.call_value(fn, args, e.span, key)

    def call_value(self, fn: Any, args: list, span: Span, key: Any = None) -> Any:
        if isinstance(fn, Builtin):
            check_key(fn, key, span)
            return fn.fn(self, args, key, span)
        if not isinstance(fn, Function):
            raise ProgramRuntimeError("type_mismatch", f"{type_name(fn)} is not callable", span)
        if key is not None:
            raise ProgramRuntimeError("type_mismatch", f"{fn.name}() does not accept key=", span)
        if len(args) != len(fn.params):
            raise ProgramRuntimeError(
                "type_mismatch", f"{fn.name}() takes {len(fn.params)} arguments, got {len(args)}", span
            )
        if self.depth >= self.budget.max_call_depth:
            raise ProgramRuntimeError(
                "budget_exceeded", f"call depth limit of {self.budget.max_call_depth} reached", span, detail="depth"
            )
        local = Frame(fn.local_names, fn.env)
        local.vars.update(zip(fn.params, args))
        self.depth += 1
        try:
            self.block(fn.body, local)
        except _Return as ret:
            return ret.value
        except _Break as sig:
            kind = "continue" if isinstance(sig, _Continue) else "break"
            raise ProgramRuntimeError("invalid_control_flow", f"'{kind}' outside loop", sig.span) from None
        finally:
            self.depth -= 1
        return None

    def _method(self, e: n.MethodCall, frame: Frame) -> Any:
        obj = self.eval(e.obj, frame)
        args = [self.eval(a, frame) for a in e.args]
        if not isinstance(obj, str):
            raise ProgramRuntimeError("type_mismatch", f".{e.method}() needs text, got {type_name(obj)}", e.span)
        if e.method in ("lower", "upper"):
            if args:
                raise ProgramRuntimeError("type_mismatch", f".{e.method}() takes no arguments", e.span)
            return obj.lower() if e.method == "lower" else obj.upper()
        if len(args) > 1 or (args and not (isinstance(args[0], str) or args[0] is None)):
            raise ProgramRuntimeError("type_mismatch", f".{e.method}() takes at most one text argument", e.span)
        arg = args[0] if args else None
        if e.method == "strip":
            return obj.strip(arg)
        if arg == "":
            raise ProgramRuntimeError("value_error", "empty separator", e.span)
        parts = obj.split(arg)
        self.charge(len(parts), e.span)
        return parts

    def _unary(self, e: n.Unary, frame: Frame) -> Any:
        value = self.eval(e.operand, frame)
        if e.op == "not":
            if not isinstance(value, bool):
                raise ProgramRuntimeError("type_mismatch", f"'not' needs a boolean, got {type_name(value)}", e.span)
            return not value
        if not is_number(value):
            raise ProgramRuntimeError("type_mismatch", f"unary {e.op} needs a number, got {type_name(value)}", e.span)
        return -value if e.op == "-" else value

    def _binary(self, e: n.Binary, frame: Frame) -> Any:
        left = self.eval(e.left, frame)
        right = self.eval(e.right, frame)
        return self.binary(e.op, left, right, e.span)

    def binary(self, op: str, a: Any, b: Any, span: Span) -> Any:
        if is_number(a) and is_number(b):
            if op == "+":
                return a + b
            if op in ("/", "//", "%") and b == 0:
                raise ProgramRuntimeError("division_by_zero", "division by zero", span)
            try:
                result = _ARITH[op](a, b)
            except ZeroDivisionError:
                raise ProgramRuntimeError("division_by_zero", "zero raised to a negative power", span) from None
            except OverflowError:
                raise ProgramRuntimeError("overflow", f"numeric overflow in {op}", span) from None
            if isinstance(result, complex):
                raise ProgramRuntimeError("value_error", "fractional power of a negative number", span)
            return float(result)
        if op == "+":
            if isinstance(a, str) and isinstance(b, str):
                self.charge(len(a) + len(b), span)
                return a + b
            if isinstance(a, list) and isinstance(b, list):
                self.charge(len(a) + len(b), span)
                return a + b
        if op == "*":
            seq, count = (a, b) if is_number(b) else (b, a)
            if isinstance(seq, (str, list)) and is_number(count):
                if not math.isfinite(count) or count != int(count):
                    raise ProgramRuntimeError("type_mismatch", "repetition count must be a whole number", span)
                times = max(0, int(count))
                self.charge(len(seq) * times, span)
                return seq * times
        raise ProgramRuntimeError(
            "type_mismatch", f"unsupported operand types for {op}: {type_name(a)} and {type_name(b)}", span
        )

    def _boolop(self, e: n.BoolOp, frame: Frame) -> Any:
        stop_on = e.op == "or"
        for sub in e.values:
            value = self.eval(sub, frame)
            if not isinstance(value, bool):
                raise ProgramRuntimeError(
                    "type_mismatch", f"'{e.op}' needs booleans, got {type_name(value)}", sub.span
                )
            if value is stop_on:
                return value
        return not stop_on

    def _compare(self, e: n.Compare, frame: Frame) -> Any:
        left = self.eval(e.left, frame)
        for op, comp in zip(e.ops, e.comparators):
            right = self.eval(comp, frame)
            if not self.compare(op, left, right, comp.span):
                return False
            left = right
        return True

    def compare(self, op: str, a: Any, b: Any, span: Span) -> bool:
        if op == "==":
            return values_equal(a, b)
        if op == "!=":
            return not values_equal(a, b)
        if op in ("is", "is not"):
            if a is None or b is None:
                same = a is b
            elif isinstance(a, bool) and isinstance(b, bool):
                same = a == b
            else:
                raise ProgramRuntimeError("type_mismatch", "'is' compares only against None or booleans", span)
            return same if op == "is" else not same
        if op in ("in", "not in"):
            if isinstance(b, list):
                self.charge(len(b), span)
                found = any(values_equal(a, x) for x in b)
            elif isinstance(b, str):
                if not isinstance(a, str):
                    raise ProgramRuntimeError("type_mismatch", f"'in <text>' needs text, got {type_name(a)}", span)
                found = a in b
            elif isinstance(b, dict):
                found = isinstance(a, str) and a in b
            else:
                raise ProgramRuntimeError("type_mismatch", f"'in' needs a list, text or mapping, got {type_name(b)}", span)
            return found if op == "in" else not found
        ka, kb = ordering_key(a, span), ordering_key(b, span)
        if ka[0] != kb[0]:
            raise ProgramRuntimeError("type_mismatch", f"cannot compare {type_name(a)} with {type_name(b)}", span)
        return _ORDER[op](ka[1], kb[1])

    _EXPR = {
        n.Num: _num,
        n.Str: _str,
        n.Bool: _bool,
        n.NoneLit: _none,
        n.ListLit: _list,
        n.DictLit: _dict,
        n.Name: _name,
        n.Subscript: _subscript,
        n.Call: _call,
        n.MethodCall: _method,
        n.Unary: _unary,
        n.Binary: _binary,
        n.BoolOp: _boolop,
        n.Compare: _compare,
    }

    # --- tools -------------------------------------------------------------------

    def _invoke_tool(self, tool: str, args: dict[str, Any], call, span: Span) -> Any:
        if self.tools is None:
            raise ProgramRuntimeError("tool_error", f"no tool provider configured for {tool}", span)
        if len(self.trace) >= self.budget.max_tool_calls:
            raise ProgramRuntimeError(
                "budget_exceeded", f"tool-call budget of {self.budget.max_tool_calls} exhausted", span,
                detail="tool_calls",
            )
        self._check_wall(span)
        t0 = time.monotonic()
        try:
            result = from_host(call())
        except (ProviderError, OutOfBounds, EmptyPrompt, ValueError) as exc:
            self.trace.append(ToolCall(tool, args, None, f"{type(exc).__name__}: {exc}", time.monotonic() - t0))
            raise ProgramRuntimeError("tool_error", f"{tool} failed: {exc}", span) from None
        self.trace.append(ToolCall(tool, args, to_json(result), None, time.monotonic() - t0))
        return result

    def _tool_gd_detect(self, interp, args, key, span):
        if len(args) != 2:
            raise ProgramRuntimeError("type_mismatch", f"gd_detect() takes 2 arguments, got {len(args)}", span)
        tools = self._require_tools(span)
        image = tools.image(args[0], span)
        prompt = _text("prompt", args[1], span)
        return self._invoke_tool(
            "gd_detect",
            {"image": args[0], "prompt": prompt},
            lambda: [
                {"bbox": d.bbox.as_list(), "label": d.label, "score": d.score}
                for d in tools.provider.detect(image, prompt, tools.box_threshold, tools.text_threshold)
            ],
            span,
        )

    def _tool_depth(self, interp, args, key, span):
        if len(args) != 2:
            raise ProgramRuntimeError("type_mismatch", f"depth() takes 2 arguments, got {len(args)}", span)
        tools = self._require_tools(span)
        image = tools.image(args[0], span)
        box = _bbox(args[1], span)
        return self._invoke_tool(
            "depth", {"image": args[0], "bbox": box.as_list()}, lambda: tools.provider.depth_at(image, box), span
        )

    def _tool_vqa(self, interp, args, key, span):
        if len(args) != 3:
            raise ProgramRuntimeError("type_mismatch", f"vqa() takes 3 arguments, got {len(args)}", span)
        tools = self._require_tools(span)
        image = tools.image(args[0], span)
        box = None if args[1] is None else _bbox(args[1], span)
        question = _text("prompt", args[2], span)
        return self._invoke_tool(
            "vqa",
            {"image": args[0], "bbox": box.as_list() if box else None, "question": question},
            lambda: tools.provider.vqa(image, box, question),
            span,
        )

    def _require_tools(self, span: Span) -> ToolBridge:
        if self.tools is None:
            raise ProgramRuntimeError("tool_error", "no tool provider configured", span)
        return self.tools


def execute(
    program: n.Program,
    tools: ToolBridge | None,
    budget: Budget = Budget(),
    bindings: Mapping[str, Any] | None = None,
) -> ExecutionResult:
    """Run ``program``. ``img_pth`` is pre-bound to the sole image ref when the
    bridge holds exactly one image and ``bindings`` does not set it."""
    env = dict(bindings or {})
    if "img_pth" not in env and tools is not None and len(tools.images) == 1:
        env["img_pth"] = next(iter(tools.images))
    return Interpreter(tools, budget).run(program, env)


def extract_final_answer(result: ExecutionResult) -> Any:
    if not result.ok:
        raise MissingAnswer(f"execution did not finish ({result.status})")
    if ANSWER_NAME not in result.bindings:
        raise MissingAnswer(f"{ANSWER_NAME} is not bound")
    value = result.bindings[ANSWER_NAME]
    if is_callable(value):
        raise MissingAnswer(f"{ANSWER_NAME} is bound to a callable")
    return value
