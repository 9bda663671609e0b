"""Precedence-aware Stan surface printer.

Output reparses to a structurally identical AST, which is what the
round-trip tests and ``--emit-kernel`` rely on.
"""

from __future__ import annotations

import math

from . import ast as A

_BINARY_PREC = {
    "logical_or": 1,
    "logical_and": 2,
    "logical_eq": 3,
    "logical_neq": 3,
    "logical_lt": 4,
    "logical_lte": 4,
    "logical_gt": 4,
    "logical_gte": 4,
    "add": 5,
    "subtract": 5,
    "multiply": 6,
    "divide": 6,
    "modulus": 6,
    "elt_multiply": 6,
    "elt_divide": 6,
}
_UNARY_PREC = 7
_POW_PREC = 8
_POSTFIX_PREC = 9
_ATOM_PREC = 10

INDENT = "  "


def format_number(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if math.isinf(value):
        return "positive_infinity()" if value > 0 else "negative_infinity()"
    if math.isnan(value):
        return "not_a_number()"
    return repr(float(value))


def _prec(e) -> int:
    if isinstance(e, A.Call):
        if e.name in _BINARY_PREC and len(e.args) == 2:
            return _BINARY_PREC[e.name]
        if e.name == "pow" and len(e.args) == 2:
            return _POW_PREC
        if e.name in A.UNARY_NAMES and len(e.args) == 1:
            return _UNARY_PREC
        if e.name == "transpose" and len(e.args) == 1:
            return _POSTFIX_PREC
    if isinstance(e, A.Index):
        return _POSTFIX_PREC
    if isinstance(e, A.Const) and (e.value < 0 or (isinstance(e.value, float) and math.copysign(1, e.value) < 0)):
        return _UNARY_PREC
    return _ATOM_PREC


def _wrap(e, min_prec: int, fmt=format_number) -> str:
    text = expr_to_str(e, fmt)
    return f"({text})" if _prec(e) < min_prec else text


def expr_to_str(e, fmt=format_number) -> str:
    """Render an expression; ``fmt`` formats numeric constants."""
    if isinstance(e, A.Const):
        return fmt(e.value)
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.ArrayLit):
        return "{" + ", ".join(expr_to_str(x, fmt) for x in e.items) + "}"
    if isinstance(e, A.VectorLit):
        return "[" + ", ".join(expr_to_str(x, fmt) for x in e.items) + "]"
    if isinstance(e, A.MatrixLit):
        rows = ("[" + ", ".join(expr_to_str(x, fmt) for x in row) + "]" for row in e.rows)
        return "[" + ", ".join(rows) + "]"
    if isinstance(e, A.Index):
        return _wrap(e.base, _POSTFIX_PREC, fmt) + "[" + ", ".join(expr_to_str(i, fmt) for i in e.indices) + "]"
    if isinstance(e, A.Call):
        p = _prec(e)
        if p in (1, 2, 3, 4, 5, 6) and e.name in _BINARY_PREC:
            op = A.OPERATOR_NAMES[e.name]
            return f"{_wrap(e.args[0], p, fmt)} {op} {_wrap(e.args[1], p + 1, fmt)}"
        if p == _POW_PREC and e.name == "pow":
            return f"{_wrap(e.args[0], _POSTFIX_PREC, fmt)}^{_wrap(e.args[1], _UNARY_PREC, fmt)}"
        if p == _UNARY_PREC and e.name in A.UNARY_NAMES:
            return A.UNARY_NAMES[e.name] + _wrap(e.args[0], _UNARY_PREC, fmt)
        if p == _POSTFIX_PREC and e.name == "transpose":
            return _wrap(e.args[0], _POSTFIX_PREC, fmt) + "'"
        return f"{e.name}(" + ", ".join(expr_to_str(a, fmt) for a in e.args) + ")"
    raise TypeError(f"not an expression: {e!r}")


def _size(s) -> str:
    return "_" if isinstance(s, A.Wild) else expr_to_str(s)


def decl_to_str(d: A.Decl) -> str:
    out = d.base.kind
    c = d.constraint
    if not c.is_empty:
        parts = []
        if c.lower is not None:
            parts.append(f"lower={_wrap(c.lower, 5)}")
        if c.upper is not None:
            parts.append(f"upper={_wrap(c.upper, 5)}")
        out += "<" + ", ".join(parts) + ">"
    if d.base.sizes:
        out += "[" + ", ".join(_size(s) for s in d.base.sizes) + "]"
    out += " " + d.name
    if isinstance(d.dims, A.Star):
        out += "[*]"
    elif d.dims is not None:
        out += "[" + ", ".join(_size(s) for s in d.dims) + "]"
    return out + ";"


def stmt_lines(s, depth: int = 0) -> list[str]:
    pad = INDENT * depth
    if isinstance(s, A.Seq):
        lines = []
        for x in s.stmts:
            lines.extend(stmt_lines(x, depth))
        return lines
    if isinstance(s, A.Assign):
        lhs = s.name
        if s.indices:
            lhs += "[" + ", ".join(expr_to_str(i) for i in s.indices) + "]"
        return [f"{pad}{lhs} = {expr_to_str(s.value)};"]
    if isinstance(s, A.ForRange):
        head = f"{pad}for ({s.var} in {expr_to_str(s.lo)}:{expr_to_str(s.hi)}) {{"
        return [head, *stmt_lines(s.body, depth + 1), pad + "}"]
    if isinstance(s, A.ForEach):
        head = f"{pad}for ({s.var} in {expr_to_str(s.iterable)}) {{"
        return [head, *stmt_lines(s.body, depth + 1), pad + "}"]
    if isinstance(s, A.While):
        return [f"{pad}while ({expr_to_str(s.cond)}) {{", *stmt_lines(s.body, depth + 1), pad + "}"]
    if isinstance(s, A.If):
        lines = [f"{pad}if ({expr_to_str(s.cond)}) {{", *stmt_lines(s.then, depth + 1)]
        orelse = s.orelse
        while isinstance(orelse, A.If):
            lines.append(f"{pad}}} else if ({expr_to_str(orelse.cond)}) {{")
            lines.extend(stmt_lines(orelse.then, depth + 1))
            orelse = orelse.orelse
        if not isinstance(orelse, A.Skip):
            lines.append(pad + "} else {")
            lines.extend(stmt_lines(orelse, depth + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(s, A.Skip):
        return [pad + ";"]
    if isinstance(s, A.TargetPlusEq):
        return [f"{pad}target += {expr_to_str(s.expr)};"]
    if isinstance(s, A.Tilde):
        args = ", ".join(expr_to_str(a) for a in s.args)
        return [f"{pad}{expr_to_str(s.lhs)} ~ {s.dist}({args});"]
    if isinstance(s, A.Return):
        if s.value is None:
            return [pad + "return;"]
        return [f"{pad}return {expr_to_str(s.value)};"]
    if isinstance(s, A.CallStmt):
        return [f"{pad}{s.name}(" + ", ".join(expr_to_str(a) for a in s.args) + ");"]
    raise TypeError(f"not a statement: {s!r}")


def _fun_type(t: A.FunType) -> str:
    if t.ndims:
        return t.kind + "[" + "," * (t.ndims - 1) + "]"
    return t.kind


def program_to_str(p: A.Program) -> str:
    out: list[str] = []
    for name in A.BLOCK_ORDER:
        if name == "functions":
            if not p.functions:
                continue
            out.append("functions {")
            for f in p.functions:
                params = ", ".join(f"{_fun_type(t)} {n}" for t, n in f.params)
                out.append(f"{INDENT}{_fun_type(f.return_type)} {f.name}({params}) {{")
                out.extend(INDENT * 2 + decl_to_str(d) for d in f.local_decls)
                out.extend(stmt_lines(f.body, 2))
                out.append(INDENT + "}")
            out.append("}")
            continue
        if name == "networks":
            if not p.networks:
                continue
            out.append("networks {")
            out.extend(f"{INDENT}{n.cls} {n.name};" for n in p.networks)
            out.append("}")
            continue
        block = p.block(name)
        if block is None:
            continue
        out.append(A.BLOCK_TITLES[name] + " {")
        out.extend(INDENT + decl_to_str(d) for d in block.decls)
        out.extend(stmt_lines(block.body, 1))
        out.append("}")
    return "\n".join(out) + "\n"
