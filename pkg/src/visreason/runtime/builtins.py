"""Builtin functions available to programs.

Each implementation receives the interpreter (for step charging and for
calling ``key=`` functions), the positional arguments, the optional key
callable and the call-site span.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Any, Callable

from visreason.runtime.values import Builtin, ProgramRuntimeError, is_callable, is_number, to_text, type_name
from visreason.toolprog.lexer import Span

if TYPE_CHECKING:
    from visreason.runtime.interpreter import Interpreter


def _err(kind: str, message: str, span: Span) -> ProgramRuntimeError:
    return ProgramRuntimeError(kind, message, span)


def _arity(name: str, args: list, lo: int, hi: int, span: Span) -> None:
    if not lo <= len(args) <= hi:
        want = str(lo) if lo == hi else f"{lo} to {hi}"
        raise _err("type_mismatch", f"{name}() takes {want} arguments, got {len(args)}", span)


def _whole(name: str, v: Any, span: Span) -> int:
    if not is_number(v) or not math.isfinite(v) or v != int(v):
        raise _err("type_mismatch", f"{name}() needs whole numbers, got {to_text(v)}", span)
    return int(v)


def _sequence(name: str, v: Any, span: Span) -> list:
    if isinstance(v, list):
        return v
    if isinstance(v, str):
        return list(v)
    if isinstance(v, dict):
        return list(v.keys())
    raise _err("type_mismatch", f"{name}() needs a list, got {type_name(v)}", span)


def ordering_key(v: Any, span: Span) -> tuple[int, Any]:
    if is_number(v):
        return (0, v)
    if isinstance(v, str):
        return (1, v)
    raise _err("type_mismatch", f"cannot order values of type {type_name(v)}", span)


def _check_orderable(keys: list[tuple[int, Any]], span: Span) -> None:
    if len({k[0] for k in keys}) > 1:
        raise _err("type_mismatch", "cannot order numbers against text", span)


def _keyed(interp: "Interpreter", items: list, key: Any, span: Span) -> list[tuple[int, Any]]:
    if key is None:
        keys = [ordering_key(x, span) for x in items]
    else:
        keys = [ordering_key(interp.call_value(key, [x], span), span) for x in items]
    _check_orderable(keys, span)
    return keys


def _extreme(name: str, pick_max: bool) -> Callable:
    def impl(interp: "Interpreter", args: list, key: Any, span: Span) -> Any:
        if not args:
            raise _err("type_mismatch", f"{name}() needs at least one argument", span)
        items = _sequence(name, args[0], span) if len(args) == 1 else list(args)
        if not items:
            raise _err("value_error", f"{name}() of an empty list", span)
        keys = _keyed(interp, items, key, span)
        best = 0
        for i in range(1, len(items)):
            if (keys[i] > keys[best]) if pick_max else (keys[i] < keys[best]):
                best = i
        return items[best]

    return impl


def _len(interp, args, key, span):
    _arity("len", args, 1, 1, span)
    v = args[0]
    if not isinstance(v, (str, list, dict)):
        raise _err("type_mismatch", f"len() of {type_name(v)}", span)
    return float(len(v))


def _abs(interp, args, key, span):
    _arity("abs", args, 1, 1, span)
    if not is_number(args[0]):
        raise _err("type_mismatch", f"abs() of {type_name(args[0])}", span)
    return abs(args[0])


def _parse_number(text: str, span: Span) -> float:
    try:
        value = float(text.strip())
    except ValueError:
        raise _err("value_error", f"cannot convert {text!r} to a number", span) from None
    if not math.isfinite(value):
        raise _err("value_error", f"cannot convert {text!r} to a finite number", span)
    return value


def _float(interp, args, key, span):
    _arity("float", args, 1, 1, span)
    v = args[0]
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if is_number(v):
        return v
    if isinstance(v, str):
        return _parse_number(v, span)
    raise _err("type_mismatch", f"float() of {type_name(v)}", span)


def _int(interp, args, key, span):
    _arity("int", args, 1, 1, span)
    v = args[0]
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if isinstance(v, str):
        text = v.strip()
        try:
            return float(int(text))
        except ValueError:
            raise _err("value_error", f"cannot convert {v!r} to an integer", span) from None
    if not is_number(v):
        raise _err("type_mismatch", f"int() of {type_name(v)}", span)
    if not math.isfinite(v):
        raise _err("overflow", f"int() of non-finite {to_text(v)}", span)
    return float(math.trunc(v))


def _round(interp, args, key, span):
    _arity("round", args, 1, 2, span)
    v = args[0]
    if not is_number(v):
        raise _err("type_mismatch", f"round() of {type_name(v)}", span)
    if not math.isfinite(v):
        raise _err("overflow", f"round() of non-finite {to_text(v)}", span)
    if len(args) == 1:
        return float(round(v))
    return float(round(v, _whole("round", args[1], span)))


def _sum(interp, args, key, span):
    _arity("sum", args, 1, 2, span)
    items = _sequence("sum", args[0], span)
    total = args[1] if len(args) == 2 else 0.0
    if not is_number(total):
        raise _err("type_mismatch", "sum() start must be a number", span)
    interp.charge(len(items), span)
    for x in items:
        if not is_number(x):
            raise _err("type_mismatch", f"sum() over {type_name(x)}", span)
        total = total + x
    return total


def _sorted(interp, args, key, span):
    _arity("sorted", args, 1, 1, span)
    items = list(_sequence("sorted", args[0], span))
    interp.charge(len(items), span)
    keys = _keyed(interp, items, key, span)
    order = sorted(range(len(items)), key=lambda i: keys[i])
    return [items[i] for i in order]


def _range(interp, args, key, span):
    _arity("range", args, 1, 3, span)
    ints = [_whole("range", a, span) for a in args]
    start, stop, step = (0, ints[0], 1) if len(ints) == 1 else (ints[0], ints[1], ints[2] if len(ints) == 3 else 1)
    if step == 0:
        raise _err("value_error", "range() step must not be zero", span)
    r = range(start, stop, step)
    interp.charge(len(r), span)
    return [float(i) for i in r]


def _enumerate(interp, args, key, span):
    _arity("enumerate", args, 1, 2, span)
    items = _sequence("enumerate", args[0], span)
    start = _whole("enumerate", args[1], span) if len(args) == 2 else 0
    interp.charge(len(items), span)
    return [[float(start + i), x] for i, x in enumerate(items)]


def _str(interp, args, key, span):
    _arity("str", args, 1, 1, span)
    return to_text(args[0])


_KEYED = {"min", "max", "sorted"}

BUILTINS: dict[str, Builtin] = {
    name: Builtin(name, fn, accepts_key=name in _KEYED)
    for name, fn in {
        "len": _len,
        "min": _extreme("min", False),
        "max": _extreme("max", True),
        "abs": _abs,
        "float": _float,
        "int": _int,
        "round": _round,
        "sum": _sum,
        "sorted": _sorted,
        "range": _range,
        "enumerate": _enumerate,
        "str": _str,
    }.items()
}


def check_key(builtin: Builtin, key: Any, span: Span) -> None:
    if key is not None and not builtin.accepts_key:
        raise _err("type_mismatch", f"{builtin.name}() does not accept key=", span)
    if key is not None and not is_callable(key):
        raise _err("type_mismatch", f"key= must be callable, got {type_name(key)}", span)
