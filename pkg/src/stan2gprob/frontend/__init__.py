"""Lexing, parsing and surface-level validation of extended Stan."""

from .ast import Program
from .guide import validate_guide
from .lexer import Token, lex
from .parser import parse, parse_expression, parse_statement
from .printer import expr_to_str, program_to_str

__all__ = [
    "Program",
    "Token",
    "expr_to_str",
    "lex",
    "parse",
    "parse_expression",
    "parse_statement",
    "program_to_str",
    "validate_guide",
]
