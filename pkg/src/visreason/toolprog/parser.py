"""Recursive-descent parser for tool programs."""

from __future__ import annotations

from typing import Optional

from visreason.toolprog import nodes as n
from visreason.toolprog.lexer import ProgramSyntaxError, Span, Token, tokenize

TEXT_METHODS = frozenset({"lower", "upper", "strip", "split"})

_COMPARE_KINDS = {"EQ": "==", "NE": "!=", "LT": "<", "GT": ">", "LE": "<=", "GE": ">="}
_AUG_KINDS = {
    "PLUSEQ": "+", "MINUSEQ": "-", "STAREQ": "*", "SLASHEQ": "/", "FLOORDIVEQ": "//", "PERCENTEQ": "%", "POWEQ": "**",
}
_TERM_KINDS = {"STAR": "*", "SLASH": "/", "FLOORDIV": "//", "PERCENT": "%"}
_ATOM_START = frozenset({"NAME", "NUMBER", "STRING", "LPAR", "LBRACKET", "LBRACE", "MINUS", "PLUS", "True", "False", "None", "not"})
_STRING_PREFIXES = frozenset({"f", "r", "b", "u", "rb", "br", "fr", "rf", "F", "R", "B", "U"})


class ParseError(ProgramSyntaxError):
    def __init__(self, message: str, span: Span, expected: frozenset[str] = frozenset()) -> None:
        super().__init__(message, span)
        self.expected = expected


def _describe(tok: Token) -> str:
    if tok.kind in ("NAME", "KEYWORD"):
        return repr(tok.value)
    if tok.kind == "NUMBER":
        return "number"
    if tok.kind == "STRING":
        return "string"
    if tok.kind in ("NEWLINE", "INDENT", "DEDENT", "EOF"):
        return {"NEWLINE": "end of line", "INDENT": "indent", "DEDENT": "dedent", "EOF": "end of input"}[tok.kind]
    return repr(tok.value)


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.toks = tokens
        self.i = 0

    # --- token helpers ---------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    @property
    def prev(self) -> Token:
        return self.toks[self.i - 1]

    def peek(self, offset: int = 1) -> Token:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def at(self, kind: str, value: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (value is None or t.value == value)

    def at_kw(self, word: str) -> bool:
        return self.at("KEYWORD", word)

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.i += 1
        return t

    def error(self, message: str, expected: frozenset[str] | set[str] = frozenset(), tok: Token | None = None) -> ParseError:
        return ParseError(message, (tok or self.tok).span, frozenset(expected))

    def expect(self, kind: str, what: str | None = None) -> Token:
        if not self.at(kind):
            raise self.error(f"expected {what or kind}, found {_describe(self.tok)}", {kind})
        return self.advance()

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            raise self.error(f"expected '{word}', found {_describe(self.tok)}", {word})
        return self.advance()

    def span_from(self, start: Token) -> Span:
        s, e = start.span, self.prev.span
        return Span(s.start, max(s.start, e.end), s.line, s.col)

    # --- statements ------------------------------------------------------------

    def program(self) -> n.Program:
        body: list[n.Stmt] = []
        while not self.at("EOF"):
            if self.at("INDENT"):
                raise self.error("unexpected indent")
            body.extend(self.statement())
        return n.Program(tuple(body), span=Span(0, self.tok.span.end, 1, 1))

    def statement(self) -> list[n.Stmt]:
        if self.at("KEYWORD"):
            word = self.tok.value
            if word == "if":
                return [self.if_stmt()]
            if word == "for":
                return [self.for_stmt()]
            if word == "while":
                return [self.while_stmt()]
            if word == "def":
                return [self.def_stmt()]
            if word in ("elif", "else"):
                raise self.error(f"'{word}' without a matching 'if'")
        return self.simple_statements()

    def simple_statements(self) -> list[n.Stmt]:
        out = [self.small_statement()]
        while self.at("SEMI"):
            self.advance()
            if self.at("NEWLINE"):
                break
            out.append(self.small_statement())
        if not self.at("NEWLINE"):
            raise self._trailing_error()
        self.advance()
        return out

    def _trailing_error(self) -> ParseError:
        t = self.tok
        if t.kind == "KEYWORD" and t.value == "if":
            return self.error("conditional expressions are not supported")
        if t.kind == "KEYWORD" and t.value == "for":
            return self.error("comprehensions are not supported")
        if t.kind == "ASSIGN":
            return self.error("chained or invalid assignment target")
        return self.error(f"expected end of line, found {_describe(t)}", {"NEWLINE", "SEMI"})

    def small_statement(self) -> n.Stmt:
        start = self.tok
        if start.kind == "KEYWORD":
            word = start.value
            if word == "return":
                self.advance()
                value = None if self.at("NEWLINE") or self.at("SEMI") else self.expression()
                return n.Return(value, span=self.span_from(start))
            if word == "break":
                self.advance()
                return n.Break(span=self.span_from(start))
            if word == "continue":
                self.advance()
                return n.Continue(span=self.span_from(start))
            if word not in ("not", "True", "False", "None"):
                self._reject_keyword(start)
        first = self.expression()
        if self.at("COMMA"):
            elts = [first]
            while self.at("COMMA"):
                self.advance()
                elts.append(self.expression())
            if not self.at("ASSIGN"):
                raise self.error("tuple expressions are not supported", {"ASSIGN"})
            target: n.Target = n.TupleTarget(tuple(self._simple_target(e) for e in elts), span=self.span_from(start))
            return self._finish_assign(start, target)
        if self.at("ASSIGN"):
            return self._finish_assign(start, self._simple_target(first))
        if self.tok.kind in _AUG_KINDS:
            op = _AUG_KINDS[self.advance().kind]
            value = self.expression()
            return n.AugAssign(self._simple_target(first), op, value, span=self.span_from(start))
        return n.ExprStmt(first, span=self.span_from(start))

    def _finish_assign(self, start: Token, target: n.Target) -> n.Assign:
        self.expect("ASSIGN")
        value = self.expression()
        if self.at("ASSIGN"):
            raise self.error("chained assignment is not supported")
        if self.at("COMMA"):
            raise self.error("tuple expressions are not supported")
        return n.Assign(target, value, span=self.span_from(start))

    def _simple_target(self, expr: n.Expr) -> n.Name | n.Subscript:
        if isinstance(expr, (n.Name, n.Subscript)):
            return expr
        raise ParseError("invalid assignment target", expr.span, frozenset({"NAME"}))

    def _reject_keyword(self, tok: Token) -> None:
        word = tok.value
        if word in ("import", "from"):
            raise self.error("imports are not supported", tok=tok)
        if word in ("try", "except", "finally", "raise"):
            raise self.error("exceptions are not supported", tok=tok)
        if word == "class":
            raise self.error("classes are not supported", tok=tok)
        if word == "lambda":
            raise self.error("lambda expressions are not supported", tok=tok)
        raise self.error(f"'{word}' is not supported", tok=tok)

    def suite(self) -> tuple[n.Stmt, ...]:
        self.expect("COLON", "':'")
        if not self.at("NEWLINE"):
            return tuple(self.simple_statements())
        self.advance()
        if not self.at("INDENT"):
            raise self.error("expected an indented block", {"INDENT"})
        self.advance()
        body: list[n.Stmt] = []
        while not self.at("DEDENT") and not self.at("EOF"):
            if self.at("INDENT"):
                raise self.error("unexpected indent")
            body.extend(self.statement())
        self.expect("DEDENT", "dedent")
        return tuple(body)

    def if_stmt(self) -> n.If:
        start = self.advance()
        branches = [(self.expression(), self.suite())]
        orelse: Optional[tuple[n.Stmt, ...]] = None
        while self.at_kw("elif"):
            self.advance()
            branches.append((self.expression(), self.suite()))
        if self.at_kw("else"):
            self.advance()
            orelse = self.suite()
        return n.If(tuple(branches), orelse, span=self.span_from(start))

    def for_stmt(self) -> n.For:
        start = self.advance()
        t0 = self.tok
        names = [self._name_target()]
        while self.at("COMMA"):
            self.advance()
            names.append(self._name_target())
        target: n.Name | n.TupleTarget = names[0] if len(names) == 1 else n.TupleTarget(tuple(names), span=self.span_from(t0))
        self.expect_kw("in")
        iterable = self.expression()
        return n.For(target, iterable, self.suite(), span=self.span_from(start))

    def _name_target(self) -> n.Name:
        tok = self.expect("NAME", "a loop variable name")
        return n.Name(tok.value, span=tok.span)

    def while_stmt(self) -> n.While:
        start = self.advance()
        test = self.expression()
        return n.While(test, self.suite(), span=self.span_from(start))

    def def_stmt(self) -> n.FunctionDef:
        start = self.advance()
        name = self.expect("NAME", "a function name").value
        self.expect("LPAR", "'('")
        params: list[str] = []
        while not self.at("RPAR"):
            if self.at("STAR") or self.at("POW"):
                raise self.error("variadic parameters are not supported")
            tok = self.expect("NAME", "a parameter name")
            if tok.value in params:
                raise ParseError(f"duplicate parameter {tok.value!r}", tok.span)
            if self.at("ASSIGN"):
                raise self.error("default parameter values are not supported")
            params.append(tok.value)
            if not self.at("COMMA"):
                break
            self.advance()
        self.expect("RPAR", "')'")
        return n.FunctionDef(name, tuple(params), self.suite(), span=self.span_from(start))

    # --- expressions -----------------------------------------------------------

    def expression(self) -> n.Expr:
        if self.at_kw("lambda"):
            self._reject_keyword(self.tok)
        return self.or_test()

    def _boolop(self, word: str, sub) -> n.Expr:
        start = self.tok
        first = sub()
        if not self.at_kw(word):
            return first
        values = [first]
        while self.at_kw(word):
            self.advance()
            values.append(sub())
        return n.BoolOp(word, tuple(values), span=self.span_from(start))

    def or_test(self) -> n.Expr:
        return self._boolop("or", self.and_test)

    def and_test(self) -> n.Expr:
        return self._boolop("and", self.not_test)

    def not_test(self) -> n.Expr:
        if self.at_kw("not"):
            start = self.advance()
            operand = self.not_test()
            return n.Unary("not", operand, span=self.span_from(start))
        return self.comparison()

    def _compare_op(self) -> str | None:
        t = self.tok
        if t.kind in _COMPARE_KINDS:
            self.advance()
            return _COMPARE_KINDS[t.kind]
        if t.kind == "KEYWORD":
            if t.value == "in":
                self.advance()
                return "in"
            if t.value == "not" and self.peek().kind == "KEYWORD" and self.peek().value == "in":
                self.advance()
                self.advance()
                return "not in"
            if t.value == "is":
                self.advance()
                if self.at_kw("not"):
                    self.advance()
                    return "is not"
                return "is"
        return None

    def comparison(self) -> n.Expr:
        start = self.tok
        left = self.arith()
        ops: list[str] = []
        rest: list[n.Expr] = []
        while (op := self._compare_op()) is not None:
            ops.append(op)
            rest.append(self.arith())
        if not ops:
            return left
        return n.Compare(left, tuple(ops), tuple(rest), span=self.span_from(start))

    def _binary_chain(self, kinds: dict[str, str], sub) -> n.Expr:
        start = self.tok
        left = sub()
        while self.tok.kind in kinds:
            op = kinds[self.advance().kind]
            right = sub()
            left = n.Binary(op, left, right, span=self.span_from(start))
        return left

    def arith(self) -> n.Expr:
        return self._binary_chain({"PLUS": "+", "MINUS": "-"}, self.term)

    def term(self) -> n.Expr:
        return self._binary_chain(_TERM_KINDS, self.factor)

    def factor(self) -> n.Expr:
        if self.at("MINUS") or self.at("PLUS"):
            start = self.advance()
            operand = self.factor()
            return n.Unary(start.value, operand, span=self.span_from(start))
        return self.power()

    def power(self) -> n.Expr:
        start = self.tok
        base = self.primary()
        if self.at("POW"):
            self.advance()
            exponent = self.factor()
            return n.Binary("**", base, exponent, span=self.span_from(start))
        return base

    def primary(self) -> n.Expr:
        start = self.tok
        expr = self.atom()
        while True:
            if self.at("LBRACKET"):
                self.advance()
                if self.at("COLON"):
                    raise self.error("slicing is not supported")
                index = self.expression()
                if self.at("COLON"):
                    raise self.error("slicing is not supported")
                if self.at("COMMA"):
                    raise self.error("tuple expressions are not supported")
                self.expect("RBRACKET", "']'")
                expr = n.Subscript(expr, index, span=self.span_from(start))
            elif self.at("LPAR"):
                if not isinstance(expr, n.Name):
                    raise self.error("only named functions can be called")
                args, keywords = self.call_args()
                expr = n.Call(expr.id, args, keywords, span=self.span_from(start))
            elif self.at("DOT"):
                self.advance()
                name_tok = self.expect("NAME", "a method name")
                if not self.at("LPAR"):
                    raise ParseError("attribute access is not supported", name_tok.span)
                if name_tok.value not in TEXT_METHODS:
                    raise ParseError(
                        f"method {name_tok.value!r} is not supported (allowed: {', '.join(sorted(TEXT_METHODS))})",
                        name_tok.span,
                        TEXT_METHODS,
                    )
                args, keywords = self.call_args()
                if keywords:
                    raise self.error("method calls take positional arguments only")
                expr = n.MethodCall(expr, name_tok.value, args, span=self.span_from(start))
            else:
                return expr

    def call_args(self) -> tuple[tuple[n.Expr, ...], tuple[tuple[str, n.Expr], ...]]:
        self.expect("LPAR", "'('")
        args: list[n.Expr] = []
        keywords: list[tuple[str, n.Expr]] = []
        while not self.at("RPAR"):
            if self.at("STAR") or self.at("POW"):
                raise self.error("argument unpacking is not supported")
            if self.at("NAME") and self.peek().kind == "ASSIGN":
                kw = self.advance()
                if kw.value != "key":
                    raise ParseError(f"keyword argument {kw.value!r} is not supported (only key=)", kw.span, frozenset({"key"}))
                if any(k == "key" for k, _ in keywords):
                    raise ParseError("repeated keyword argument 'key'", kw.span)
                self.advance()
                keywords.append(("key", self.expression()))
            else:
                if keywords:
                    raise self.error("positional argument follows keyword argument")
                args.append(self.expression())
            if self.at_kw("for"):
                raise self.error("comprehensions are not supported")
            if not self.at("COMMA"):
                break
            self.advance()
        self.expect("RPAR", "')'")
        return tuple(args), tuple(keywords)

    def atom(self) -> n.Expr:
        t = self.tok
        if t.kind == "NUMBER":
            self.advance()
            return n.Num(t.value, span=t.span)
        if t.kind == "STRING":
            parts = [self.advance().value]
            while self.at("STRING"):
                parts.append(self.advance().value)
            return n.Str("".join(parts), span=self.span_from(t))
        if t.kind == "NAME":
            self.advance()
            nxt = self.tok
            if nxt.kind == "STRING" and t.value in _STRING_PREFIXES and nxt.span.start == t.span.end:
                raise ParseError("string prefixes (f-strings, raw strings) are not supported", t.span)
            return n.Name(t.value, span=t.span)
        if t.kind == "KEYWORD":
            if t.value in ("True", "False"):
                self.advance()
                return n.Bool(t.value == "True", span=t.span)
            if t.value == "None":
                self.advance()
                return n.NoneLit(span=t.span)
            if t.value == "lambda":
                self._reject_keyword(t)
        if t.kind == "LPAR":
            self.advance()
            if self.at("RPAR"):
                raise self.error("tuple expressions are not supported")
            inner = self.expression()
            if self.at("COMMA"):
                raise self.error("tuple expressions are not supported")
            if self.at_kw("for"):
                raise self.error("comprehensions are not supported")
            if self.at_kw("if"):
                raise self.error("conditional expressions are not supported")
            self.expect("RPAR", "')'")
            return inner
        if t.kind == "LBRACKET":
            return self.list_display()
        if t.kind == "LBRACE":
            return self.dict_display()
        raise self.error(f"expected an expression, found {_describe(t)}", _ATOM_START)

    def list_display(self) -> n.ListLit:
        start = self.advance()
        items: list[n.Expr] = []
        while not self.at("RBRACKET"):
            items.append(self.expression())
            if self.at_kw("for"):
                raise self.error("comprehensions are not supported")
            if not self.at("COMMA"):
                break
            self.advance()
        self.expect("RBRACKET", "']'")
        return n.ListLit(tuple(items), span=self.span_from(start))

    def dict_display(self) -> n.DictLit:
        start = self.advance()
        items: list[tuple[n.Expr, n.Expr]] = []
        while not self.at("RBRACE"):
            key = self.expression()
            if not self.at("COLON"):
                raise self.error("set literals are not supported; expected ':'", {"COLON"})
            self.advance()
            value = self.expression()
            if self.at_kw("for"):
                raise self.error("comprehensions are not supported")
            items.append((key, value))
            if not self.at("COMMA"):
                break
            self.advance()
        self.expect("RBRACE", "'}'")
        return n.DictLit(tuple(items), span=self.span_from(start))


def parse_program(source: str) -> n.Program:
    """Parse program text; raises :class:`ParseError` or :class:`LexError`."""
    parser = _Parser(tokenize(source))
    try:
        return parser.program()
    except RecursionError:
        raise ParseError("program is nested too deeply", parser.tok.span) from None


def parse_expression(source: str) -> n.Expr:
    p = _Parser(tokenize(source))
    expr = p.expression()
    if p.at("NEWLINE"):
        p.advance()
    if not p.at("EOF"):
        raise p.error(f"unexpected {_describe(p.tok)} after expression", {"EOF"})
    return expr
