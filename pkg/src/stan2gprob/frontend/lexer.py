"""Tokenizer for extended Stan source."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from ..diagnostics import Span, error


@dataclass(frozen=True)
class Token:
    kind: str
    value: Union[str, int, float, None] = None
    span: Span = field(default=Span(0, 0), compare=False)

    def __repr__(self) -> str:
        if self.value is None:
            return self.kind
        return f"{self.kind}({self.value})"


KEYWORDS = {
    "functions": "FUNCTIONS",
    "data": "DATA",
    "transformed": "TRANSFORMED",
    "parameters": "PARAMETERS",
    "model": "MODEL",
    "generated": "GENERATED",
    "quantities": "QUANTITIES",
    "guide": "GUIDE",
    "networks": "NETWORKS",
    "int": "INT_TYPE",
    "real": "REAL",
    "vector": "VECTOR",
    "row_vector": "ROW_VECTOR",
    "matrix": "MATRIX",
    "void": "VOID",
    "for": "FOR",
    "in": "IN",
    "while": "WHILE",
    "if": "IF",
    "else": "ELSE",
    "target": "TARGET",
    "return": "RETURN",
    "print": "PRINT",
    "reject": "REJECT",
}

# Longest operators first.
PUNCTUATION = [
    ("+=", "PLUSEQ"),
    ("-=", "MINUSEQ"),
    ("*=", "TIMESEQ"),
    ("/=", "DIVEQ"),
    ("==", "EQEQ"),
    ("!=", "NEQ"),
    ("<=", "LEQ"),
    (">=", "GEQ"),
    ("&&", "AND"),
    ("||", "OR"),
    (".*", "ELTTIMES"),
    ("./", "ELTDIV"),
    ("+", "PLUS"),
    ("-", "MINUS"),
    ("*", "STAR"),
    ("/", "SLASH"),
    ("%", "PERCENT"),
    ("^", "HAT"),
    ("!", "BANG"),
    ("<", "LT"),
    (">", "GT"),
    ("=", "ASSIGN"),
    ("~", "TILDE"),
    (":", "COLON"),
    (",", "COMMA"),
    (";", "SEMI"),
    ("(", "LPAREN"),
    (")", "RPAREN"),
    ("[", "LBRACK"),
    ("]", "RBRACK"),
    ("{", "LBRACE"),
    ("}", "RBRACE"),
    ("|", "BAR"),
    ("'", "QUOTE"),
    ("?", "QUESTION"),
]

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*|_[A-Za-z0-9_]+|_")
_NUMBER = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")


def lex(source: str) -> list[Token]:
    """Split ``source`` into tokens; comments and whitespace are dropped."""
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def advance(text: str) -> None:
        nonlocal i, line, col
        for ch in text:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += len(text)

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(ch)
            continue
        if source.startswith("//", i) or ch == "#":
            end = source.find("\n", i)
            advance(source[i : n if end < 0 else end])
            continue
        if source.startswith("/*", i):
            end = source.find("*/", i + 2)
            if end < 0:
                raise error("lex-error", "unterminated block comment", Span(line, col))
            advance(source[i : end + 2])
            continue
        span = Span(line, col)
        if ch == '"':
            end = source.find('"', i + 1)
            newline = source.find("\n", i + 1)
            if end < 0 or (0 <= newline < end):
                raise error("lex-error", "unterminated string literal", span)
            text = source[i + 1 : end]
            advance(source[i : end + 1])
            tokens.append(Token("STRING", text, span))
            continue
        m = _NUMBER.match(source, i)
        if m and (ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit())):
            text = m.group(0)
            advance(text)
            if m.group(2) or "." in text:
                tokens.append(Token("FLOAT", float(text), span))
            else:
                tokens.append(Token("INT", int(text), span))
            continue
        m = _IDENT.match(source, i)
        if m:
            text = m.group(0)
            advance(text)
            if text == "_":
                tokens.append(Token("UNDERSCORE", None, span))
            elif text in KEYWORDS:
                tokens.append(Token(KEYWORDS[text], None, span))
            else:
                tokens.append(Token("ID", text, span))
            continue
        for text, kind in PUNCTUATION:
            if source.startswith(text, i):
                advance(text)
                tokens.append(Token(kind, None, span))
                break
        else:
            raise error("lex-error", f"unexpected character {ch!r}", span)
    return tokens
