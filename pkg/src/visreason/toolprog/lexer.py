"""Tokenizer for tool programs.

Indentation becomes INDENT/DEDENT tokens, newlines inside brackets are
ignored, comments and blank lines are dropped. Every logical line ends with a
NEWLINE token and the stream ends with EOF.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

KEYWORDS = frozenset(
    {"if", "elif", "else", "for", "while", "in", "not", "and", "or", "is", "def", "return", "break", "continue",
     "True", "False", "None"}
)
# Recognized so the parser can reject them with a precise message.
UNSUPPORTED_KEYWORDS = frozenset(
    {"import", "from", "class", "try", "except", "finally", "raise", "with", "lambda", "yield", "global",
     "nonlocal", "assert", "del", "pass", "async", "await", "as", "match"}
)

OPERATORS = {
    "**=": "POWEQ", "//=": "FLOORDIVEQ",
    "**": "POW", "//": "FLOORDIV", "==": "EQ", "!=": "NE", "<=": "LE", ">=": "GE",
    "+=": "PLUSEQ", "-=": "MINUSEQ", "*=": "STAREQ", "/=": "SLASHEQ", "%=": "PERCENTEQ",
    "+": "PLUS", "-": "MINUS", "*": "STAR", "/": "SLASH", "%": "PERCENT", "<": "LT", ">": "GT",
    "=": "ASSIGN", "(": "LPAR", ")": "RPAR", "[": "LBRACKET", "]": "RBRACKET", "{": "LBRACE", "}": "RBRACE",
    ",": "COMMA", ":": "COLON", ".": "DOT", ";": "SEMI",
}
_OPENERS = {"(", "[", "{"}
_CLOSERS = {")", "]", "}"}
LAYOUT = frozenset({"NEWLINE", "INDENT", "DEDENT", "EOF"})

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"', "0": "\0", "\n": ""}


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    line: int = 1
    col: int = 1

    def to_json(self) -> dict[str, int]:
        return {"start": self.start, "end": self.end, "line": self.line, "col": self.col}


NO_SPAN = Span(0, 0, 0, 0)


class ProgramSyntaxError(Exception):
    def __init__(self, message: str, span: Span) -> None:
        super().__init__(f"{message} (line {span.line}, col {span.col})")
        self.message = message
        self.span = span


class LexError(ProgramSyntaxError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str
    value: Any
    span: Span

    def __repr__(self) -> str:
        return f"{self.kind} {self.value!r}" if self.value is not None else self.kind


class _Scanner:
    def __init__(self, source: str) -> None:
        self.src = source
        self.pos = 0
        self.line = 1
        self.line_start = 0
        self.tokens: list[Token] = []
        self.indents = [0]
        self.indent_char: str | None = None
        self.depth = 0

    def span(self, start: int, end: int | None = None, line: int | None = None, line_start: int | None = None) -> Span:
        end = self.pos if end is None else end
        line = self.line if line is None else line
        line_start = self.line_start if line_start is None else line_start
        return Span(start, end, line, start - line_start + 1)

    def emit(self, kind: str, value: Any, start: int) -> None:
        self.tokens.append(Token(kind, value, self.span(start)))

    def newline(self) -> None:
        self.line += 1
        self.line_start = self.pos

    def run(self) -> list[Token]:
        src = self.src
        at_line_start = True
        while self.pos < len(src):
            if at_line_start and self.depth == 0:
                at_line_start = False
                if self._indentation():
                    at_line_start = True
                    continue
            c = src[self.pos]
            if c == "\n":
                if self.depth == 0 and self.tokens and self.tokens[-1].kind not in ("NEWLINE", "INDENT", "DEDENT"):
                    self.emit("NEWLINE", None, self.pos)
                self.pos += 1
                self.newline()
                at_line_start = True
            elif c in " \t\r\f":
                self.pos += 1
            elif c == "#":
                while self.pos < len(src) and src[self.pos] != "\n":
                    self.pos += 1
            elif c == "\\" and src.startswith("\n", self.pos + 1):
                self.pos += 2
                self.newline()
            elif c.isalpha() or c == "_":
                self._name()
            elif c.isdigit() or (c == "." and self.pos + 1 < len(src) and src[self.pos + 1].isdigit()):
                self._number()
            elif c in "'\"":
                self._string()
            else:
                self._operator()
        end = len(src)
        if self.tokens and self.tokens[-1].kind not in ("NEWLINE", "INDENT", "DEDENT"):
            self.tokens.append(Token("NEWLINE", None, self.span(end, end)))
        while len(self.indents) > 1:
            self.indents.pop()
            self.tokens.append(Token("DEDENT", None, self.span(end, end)))
        self.tokens.append(Token("EOF", None, self.span(end, end)))
        return self.tokens

    def _indentation(self) -> bool:
        """Handle leading whitespace; returns True when the line is blank or comment-only."""
        src = self.src
        start = self.pos
        while self.pos < len(src) and src[self.pos] in " \t":
            self.pos += 1
        indent = src[start:self.pos]
        if self.pos >= len(src) or src[self.pos] in "\n#\r":
            while self.pos < len(src) and src[self.pos] != "\n":
                self.pos += 1
            if self.pos < len(src):
                self.pos += 1
                self.newline()
            return True
        if indent:
            chars = set(indent)
            if len(chars) > 1:
                raise LexError("inconsistent indentation: tabs and spaces mixed", self.span(start))
            char = indent[0]
            if self.indent_char is None:
                self.indent_char = char
            elif char != self.indent_char:
                raise LexError("inconsistent indentation: tabs and spaces mixed across lines", self.span(start))
        width = len(indent)
        if width > self.indents[-1]:
            self.indents.append(width)
            self.emit("INDENT", None, start)
        elif width < self.indents[-1]:
            while width < self.indents[-1]:
                self.indents.pop()
                self.emit("DEDENT", None, start)
            if width != self.indents[-1]:
                raise LexError("inconsistent indentation: dedent does not match any outer level", self.span(start))
        return False

    def _name(self) -> None:
        start = self.pos
        src = self.src
        while self.pos < len(src) and (src[self.pos].isalnum() or src[self.pos] == "_"):
            self.pos += 1
        word = src[start:self.pos]
        if word in KEYWORDS or word in UNSUPPORTED_KEYWORDS:
            self.emit("KEYWORD", word, start)
        else:
            self.emit("NAME", word, start)

    def _number(self) -> None:
        start = self.pos
        src = self.src
        n = len(src)
        while self.pos < n and src[self.pos].isdigit():
            self.pos += 1
        if self.pos < n and src[self.pos] == ".":
            self.pos += 1
            while self.pos < n and src[self.pos].isdigit():
                self.pos += 1
        if self.pos < n and src[self.pos] in "eE":
            probe = self.pos + 1
            if probe < n and src[probe] in "+-":
                probe += 1
            if probe < n and src[probe].isdigit():
                self.pos = probe
                while self.pos < n and src[self.pos].isdigit():
                    self.pos += 1
        if self.pos < n and (src[self.pos].isalpha() or src[self.pos] == "_"):
            raise LexError(f"illegal character {src[self.pos]!r} in number", self.span(self.pos, self.pos + 1))
        value = float(src[start:self.pos])
        if value == float("inf"):
            raise LexError("number literal overflows double precision", self.span(start))
        self.emit("NUMBER", value, start)

    def _string(self) -> None:
        src = self.src
        start = self.pos
        start_line, start_line_start = self.line, self.line_start
        quote = src[self.pos]
        triple = src.startswith(quote * 3, self.pos)
        delim = quote * 3 if triple else quote
        self.pos += len(delim)
        chars: list[str] = []
        while True:
            if self.pos >= len(src):
                raise LexError("unterminated string", self.span(start, len(src), start_line, start_line_start))
            c = src[self.pos]
            if src.startswith(delim, self.pos):
                self.pos += len(delim)
                break
            if c == "\n":
                if not triple:
                    raise LexError("unterminated string", self.span(start, self.pos, start_line, start_line_start))
                chars.append(c)
                self.pos += 1
                self.newline()
                continue
            if c == "\\":
                self.pos += 1
                if self.pos >= len(src):
                    raise LexError("unterminated string", self.span(start, len(src), start_line, start_line_start))
                chars.append(self._escape())
                continue
            chars.append(c)
            self.pos += 1
        self.tokens.append(Token("STRING", "".join(chars), self.span(start, None, start_line, start_line_start)))

    def _escape(self) -> str:
        src = self.src
        c = src[self.pos]
        if c in _ESCAPES:
            self.pos += 1
            if c == "\n":
                self.newline()
            return _ESCAPES[c]
        width = {"x": 2, "u": 4, "U": 8}.get(c)
        if width is not None:
            digits = src[self.pos + 1:self.pos + 1 + width]
            if len(digits) == width and all(d in "0123456789abcdefABCDEF" for d in digits):
                self.pos += 1 + width
                return chr(int(digits, 16))
            raise LexError("malformed escape sequence", self.span(self.pos - 1, self.pos + 1))
        # unknown escapes keep the backslash, as in the host language
        return "\\"

    def _operator(self) -> None:
        src = self.src
        start = self.pos
        for size in (3, 2, 1):
            op = src[start:start + size]
            if len(op) == size and op in OPERATORS:
                self.pos += size
                if op in _OPENERS:
                    self.depth += 1
                elif op in _CLOSERS:
                    self.depth = max(0, self.depth - 1)
                self.emit(OPERATORS[op], op, start)
                return
        raise LexError(f"illegal character {src[start]!r}", self.span(start, start + 1))


def tokenize(source: str) -> list[Token]:
    return _Scanner(source).run()
