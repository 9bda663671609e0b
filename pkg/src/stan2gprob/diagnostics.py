"""Compiler diagnostics and the exception that carries them."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NO_SPAN = Span(0, 0)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Span = NO_SPAN
    severity: str = "error"

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.span.line}:{self.span.col}: {self.severity}[{self.code}]: {self.message}"

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class CompileError(Exception):
    """Raised by any pass that rejects its input.

    ``diagnostics`` always holds at least one error; the first one is the
    primary diagnostic.
    """

    def __init__(self, diagnostics: list[Diagnostic] | Diagnostic):
        if isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))

    @property
    def primary(self) -> Diagnostic:
        return self.diagnostics[0]

    @property
    def code(self) -> str:
        return self.primary.code


def error(code: str, message: str, span: Span = NO_SPAN) -> CompileError:
    return CompileError(Diagnostic(code, message, span))
