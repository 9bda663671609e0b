"""Canonical GProb surface text: printer and reader."""

from __future__ import annotations

import math

from ..diagnostics import error
from ..frontend import ast as A
from ..frontend.lexer import lex
from ..frontend.parser import _Parser
from ..frontend.printer import INDENT, expr_to_str
from .ir import (
    For,
    Factor,
    If,
    Let,
    Observe,
    Param,
    PIndex,
    PTuple,
    PUnit,
    PVar,
    Return,
    Sample,
    TupleE,
    TypeDesc,
    Unit,
    While,
)


def gprob_number(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return repr(float(value))


def gexpr_str(e) -> str:
    return expr_to_str(e, gprob_number)


def pattern_str(p) -> str:
    if isinstance(p, PVar):
        return p.name
    if isinstance(p, PIndex):
        return p.name + "[" + ", ".join(gexpr_str(i) for i in p.indices) + "]"
    if isinstance(p, PUnit):
        return "()"
    if len(p.names) == 1:
        return f"({p.names[0]},)"
    return "(" + ", ".join(p.names) + ")"


def type_desc_str(t: TypeDesc) -> str:
    out = t.kind
    if t.sizes:
        out += "[" + ", ".join(gexpr_str(s) for s in t.sizes) + "]"
    if isinstance(t.dims, A.Call):
        out += "[" + gexpr_str(t.dims) + "]"
    elif t.dims:
        out += "[" + ", ".join(gexpr_str(s) for s in t.dims) + "]"
    return out


def _return_str(v) -> str:
    if isinstance(v, Unit):
        return "()"
    if isinstance(v, TupleE):
        if len(v.items) == 1:
            return f"({gexpr_str(v.items[0])},)"
        return "(" + ", ".join(gexpr_str(i) for i in v.items) + ")"
    return gexpr_str(v)


def _lines(g, depth: int) -> list[str]:
    pad = INDENT * depth
    if isinstance(g, Let):
        value = _lines(g.value, depth + 1)
        head = f"{pad}let {pattern_str(g.pat)} ="
        if len(value) == 1:
            return [f"{head} {value[0].strip()} in", *_lines(g.body, depth)]
        return [head, *value, pad + "in", *_lines(g.body, depth)]
    if isinstance(g, If):
        return [
            f"{pad}if ({gexpr_str(g.cond)})",
            *_lines(g.then, depth + 1),
            pad + "else",
            *_lines(g.orelse, depth + 1),
        ]
    if isinstance(g, For):
        head = f"{pad}for_{{{', '.join(g.state)}}} ({g.var} in {gexpr_str(g.lo)}:{gexpr_str(g.hi)})"
        return [head, *_lines(g.body, depth + 1)]
    if isinstance(g, While):
        return [f"{pad}while_{{{', '.join(g.state)}}} ({gexpr_str(g.cond)})", *_lines(g.body, depth + 1)]
    if isinstance(g, Sample):
        if g.vtype is None:
            return [f"{pad}sample({gexpr_str(g.dist)})"]
        return [f"{pad}sample({gexpr_str(g.dist)}, {type_desc_str(g.vtype)})"]
    if isinstance(g, Observe):
        return [f"{pad}observe({gexpr_str(g.dist)}, {gexpr_str(g.value)})"]
    if isinstance(g, Factor):
        return [f"{pad}factor({gexpr_str(g.expr)})"]
    if isinstance(g, Return):
        return [f"{pad}return({_return_str(g.value)})"]
    if isinstance(g, Param):
        return [f"{pad}param({type_desc_str(g.vtype)})"]
    return [pad + gexpr_str(g)]


def emit_gprob(g) -> str:
    """Deterministic canonical text of an IR expression."""
    return "\n".join(_lines(g, 0)) + "\n"


# reader

_KIND_TOKENS = {"INT_TYPE": "int", "REAL": "real", "VECTOR": "vector", "ROW_VECTOR": "row_vector", "MATRIX": "matrix"}


def _fix_consts(e):
    """Map the reader's ``inf`` / ``-inf`` names back to constants."""
    if isinstance(e, A.Var) and e.name == "inf":
        return A.Const(math.inf)
    if isinstance(e, A.Var) and e.name == "nan":
        return A.Const(math.nan)
    if isinstance(e, A.Call):
        args = tuple(_fix_consts(a) for a in e.args)
        if e.name == "minus" and len(args) == 1 and isinstance(args[0], A.Const) and args[0].value == math.inf:
            return A.Const(-math.inf)
        return A.Call(e.name, args)
    if isinstance(e, A.Index):
        return A.Index(_fix_consts(e.base), tuple(_fix_consts(i) for i in e.indices))
    if isinstance(e, (A.ArrayLit, A.VectorLit)):
        return type(e)(tuple(_fix_consts(i) for i in e.items))
    if isinstance(e, A.MatrixLit):
        return A.MatrixLit(tuple(tuple(_fix_consts(i) for i in r) for r in e.rows))
    return e


class _Reader(_Parser):
    def gexpr(self):
        t = self.tok
        if t.kind == "ID" and t.value == "let":
            self.next()
            pat = self.pattern()
            self.expect("ASSIGN", "'='")
            value = self.gexpr()
            self.expect("IN", "'in'")
            return Let(pat, value, self.gexpr())
        if t.kind == "IF":
            self.next()
            self.expect("LPAREN", "'('")
            cond = self.sexpr()
            self.expect("RPAREN", "')'")
            then = self.gexpr()
            self.expect("ELSE", "'else'")
            return If(cond, then, self.gexpr())
        if t.kind == "ID" and t.value in ("for_", "while_") and self.peek().kind == "LBRACE":
            self.next()
            state = self.names()
            self.expect("LPAREN", "'('")
            if t.value == "for_":
                var = self.expect("ID", "loop variable").value
                self.expect("IN", "'in'")
                lo = self.sexpr()
                self.expect("COLON", "':'")
                hi = self.sexpr()
                self.expect("RPAREN", "')'")
                return For(state, var, lo, hi, self.gexpr())
            cond = self.sexpr()
            self.expect("RPAREN", "')'")
            return While(state, cond, self.gexpr())
        if t.kind == "RETURN":
            self.next()
            self.expect("LPAREN", "'('")
            value = self.return_value()
            self.expect("RPAREN", "')'")
            return Return(value)
        if t.kind == "ID" and t.value in ("sample", "observe", "factor", "param") and self.peek().kind == "LPAREN":
            self.next()
            self.next()
            if t.value == "param":
                vt = self.type_desc()
                self.expect("RPAREN", "')'")
                return Param(vt)
            first = self.sexpr()
            if t.value == "factor":
                self.expect("RPAREN", "')'")
                return Factor(first)
            if t.value == "sample":
                vt = self.type_desc() if self.accept("COMMA") else None
                self.expect("RPAREN", "')'")
                return Sample(first, vt)
            self.expect("COMMA", "','")
            value = self.sexpr()
            self.expect("RPAREN", "')'")
            return Observe(first, value)
        return self.sexpr()

    def sexpr(self):
        return _fix_consts(self.expr())

    def names(self) -> tuple:
        self.expect("LBRACE", "'{'")
        out = []
        if not self.at("RBRACE"):
            out.append(self.expect("ID", "name").value)
            while self.accept("COMMA"):
                out.append(self.expect("ID", "name").value)
        self.expect("RBRACE", "'}'")
        return tuple(out)

    def pattern(self):
        if self.accept("LPAREN"):
            if self.accept("RPAREN"):
                return PUnit()
            names = [self.expect("ID", "name").value]
            while self.accept("COMMA"):
                if self.at("RPAREN"):
                    break
                names.append(self.expect("ID", "name").value)
            self.expect("RPAREN", "')'")
            return PTuple(tuple(names))
        name = self.expect("ID", "name").value
        if self.accept("LBRACK"):
            idx = [self.sexpr()]
            while self.accept("COMMA"):
                idx.append(self.sexpr())
            self.expect("RBRACK", "']'")
            return PIndex(name, tuple(idx))
        return PVar(name)

    def return_value(self):
        if self.at("LPAREN"):
            save = self.pos
            self.next()
            if self.accept("RPAREN"):
                return Unit()
            first = self.sexpr()
            if self.accept("COMMA"):
                items = [first]
                while not self.at("RPAREN"):
                    items.append(self.sexpr())
                    if not self.accept("COMMA"):
                        break
                self.expect("RPAREN", "')'")
                return TupleE(tuple(items))
            self.pos = save
        return self.sexpr()

    def type_desc(self) -> TypeDesc:
        t = self.next()
        if t.kind not in _KIND_TOKENS:
            raise error("syntax-error", f"expected a type, found {t!r}", t.span)
        kind = _KIND_TOKENS[t.kind]
        groups = []
        while self.accept("LBRACK"):
            items = [self.sexpr()]
            while self.accept("COMMA"):
                items.append(self.sexpr())
            self.expect("RBRACK", "']'")
            groups.append(items)
        sizes: tuple = ()
        if kind in ("vector", "row_vector", "matrix") and groups:
            sizes = tuple(groups.pop(0))
        dims: object = ()
        if groups:
            items = groups.pop(0)
            if len(items) == 1 and isinstance(items[0], A.Call) and items[0].name == "shape":
                dims = items[0]
            else:
                dims = tuple(items)
        return TypeDesc(kind, sizes, dims)


def parse_gprob(text: str):
    """Read canonical GProb text back into IR."""
    r = _Reader(lex(text))
    g = r.gexpr()
    r.expect("EOF", "end of input")
    return g
