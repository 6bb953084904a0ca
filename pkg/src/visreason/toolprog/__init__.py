"""The restricted tool-program language: lexer, parser, checker and printer."""

from visreason.toolprog.checker import Diagnostic, static_check
from visreason.toolprog.corpus import GOLDEN_PROGRAMS, GoldenProgram
from visreason.toolprog.lexer import LexError, ProgramSyntaxError, Span, Token, tokenize
from visreason.toolprog.llm_output import FormatError, PlanAndCode, format_ok, parse_llm_output
from visreason.toolprog.nodes import Program
from visreason.toolprog.parser import ParseError, parse_expression, parse_program
from visreason.toolprog.printer import pretty_print

__all__ = [
    "Diagnostic",
    "FormatError",
    "GOLDEN_PROGRAMS",
    "GoldenProgram",
    "LexError",
    "ParseError",
    "PlanAndCode",
    "Program",
    "ProgramSyntaxError",
    "Span",
    "Token",
    "format_ok",
    "parse_expression",
    "parse_llm_output",
    "parse_program",
    "pretty_print",
    "static_check",
    "tokenize",
]
