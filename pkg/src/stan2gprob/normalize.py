"""Block normalization: function inlining, kernel form and phase splitting."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .diagnostics import error
from .frontend import ast as A

# Inlining


def _wild_decl(t: A.FunType, name: str) -> A.Decl:
    sizes = {"vector": 1, "row_vector": 1, "matrix": 2}.get(t.kind, 0)
    base = A.BaseType(t.kind, tuple(A.Wild() for _ in range(sizes)))
    dims = tuple(A.Wild() for _ in range(t.ndims)) if t.ndims else None
    return A.Decl(base, name, A.NO_CONSTRAINT, dims)


def _check_recursion(funs: dict) -> None:
    graph = {
        name: {c.name for c in A.calls(f.body) if c.name in funs}
        | {s.name for s in A.walk(f.body) if isinstance(s, A.CallStmt) and s.name in funs}
        for name, f in funs.items()
    }
    state: dict = {}

    def visit(n: str) -> None:
        state[n] = "active"
        for m in sorted(graph[n]):
            if state.get(m) == "active":
                raise error("unsupported-recursion", f"function '{m}' is recursive", funs[m].span)
            if m not in state:
                visit(m)
        state[n] = "done"

    for n in funs:
        if n not in state:
            visit(n)


class _Inliner:
    def __init__(self, funs: dict):
        self.funs = funs
        self.counter = itertools.count(1)
        self.new_decls: list = []

    # expressions: returns (prelude statements, rewritten expression)

    def expr(self, e):
        if isinstance(e, A.Call):
            pre, args = self.exprs(e.args)
            if e.name in self.funs:
                more, value = self.call(e.name, args, e.span, want_value=True)
                return pre + more, value
            return pre, replace(e, args=tuple(args))
        if isinstance(e, A.Index):
            pre, base = self.expr(e.base)
            more, idx = self.exprs(e.indices)
            return pre + more, replace(e, base=base, indices=tuple(idx))
        if isinstance(e, (A.ArrayLit, A.VectorLit)):
            pre, items = self.exprs(e.items)
            return pre, replace(e, items=tuple(items))
        if isinstance(e, A.MatrixLit):
            pre, rows = [], []
            for row in e.rows:
                more, items = self.exprs(row)
                pre += more
                rows.append(tuple(items))
            return pre, replace(e, rows=tuple(rows))
        return [], e

    def exprs(self, es):
        pre, out = [], []
        for e in es:
            more, x = self.expr(e)
            pre += more
            out.append(x)
        return pre, out

    def call(self, name: str, args: list, span, want_value: bool):
        f = self.funs[name]
        if len(args) != len(f.params):
            raise error(
                "arity-mismatch",
                f"function '{name}' takes {len(f.params)} argument(s), got {len(args)}",
                span,
            )
        if want_value and f.return_type.kind == "void":
            raise error("type-mismatch", f"void function '{name}' used as a value", span)
        stmts = f.body.stmts
        if (
            want_value
            and not f.local_decls
            and len(stmts) == 1
            and isinstance(stmts[0], A.Return)
            and stmts[0].value is not None
        ):
            mapping = {p: a for (_, p), a in zip(f.params, args)}
            return self.expr(substitute(stmts[0].value, mapping))
        n = next(self.counter)
        rename = {p: f"{name}__{n}__{p}" for _, p in f.params}
        rename.update({d.name: f"{name}__{n}__{d.name}" for d in f.local_decls})
        pre: list = []
        for (t, p), a in zip(f.params, args):
            self.new_decls.append(_wild_decl(t, rename[p]))
            pre.append(A.Assign(rename[p], (), a, span=span))
        for d in f.local_decls:
            self.new_decls.append(rename_decl(d, rename))
        ret = None
        if f.return_type.kind != "void":
            ret = f"{name}__{n}__return"
            self.new_decls.append(_wild_decl(f.return_type, ret))
        body = rename_stmt(f.body, rename)
        body = _tail_returns(body, ret, name)
        pre.extend(self.stmt(body).stmts)
        return pre, (A.Var(ret, span=span) if ret else None)

    # statements

    def stmt(self, s) -> A.Seq:
        if isinstance(s, A.Seq):
            return A.seq(*(self.stmt(x) for x in s.stmts))
        if isinstance(s, A.Assign):
            pre, idx = self.exprs(s.indices)
            more, value = self.expr(s.value)
            return A.seq(*pre, *more, replace(s, indices=tuple(idx), value=value))
        if isinstance(s, A.ForRange):
            pre, (lo, hi) = self.exprs((s.lo, s.hi))
            return A.seq(*pre, replace(s, lo=lo, hi=hi, body=self.body(s.body)))
        if isinstance(s, A.ForEach):
            pre, it = self.expr(s.iterable)
            return A.seq(*pre, replace(s, iterable=it, body=self.body(s.body)))
        if isinstance(s, A.While):
            pre, cond = self.expr(s.cond)
            body = self.body(s.body)
            if pre:
                body = A.seq(body, *pre)
            return A.seq(*pre, replace(s, cond=cond, body=body))
        if isinstance(s, A.If):
            pre, cond = self.expr(s.cond)
            return A.seq(*pre, replace(s, cond=cond, then=self.body(s.then), orelse=self.body(s.orelse)))
        if isinstance(s, A.TargetPlusEq):
            pre, e = self.expr(s.expr)
            return A.seq(*pre, replace(s, expr=e))
        if isinstance(s, A.Tilde):
            pre, lhs = self.expr(s.lhs)
            more, args = self.exprs(s.args)
            return A.seq(*pre, *more, replace(s, lhs=lhs, args=tuple(args)))
        if isinstance(s, A.CallStmt):
            pre, args = self.exprs(s.args)
            if s.name not in self.funs:
                raise error("unknown-function", f"'{s.name}' is not a user-defined function", s.span)
            more, _ = self.call(s.name, args, s.span, want_value=False)
            return A.seq(*pre, *more)
        if isinstance(s, A.Return):
            raise error("syntax-error", "'return' outside of a function", s.span)
        return A.seq(s)

    def body(self, s):
        out = self.stmt(s)
        if not isinstance(s, A.Seq) and len(out.stmts) == 1:
            return out.stmts[0]
        return out


def _tail_returns(s, ret, fname):
    """Replace tail-position returns by assignments to ``ret``."""
    if isinstance(s, A.Seq):
        if not s.stmts:
            return s
        for x in s.stmts[:-1]:
            _no_returns(x, fname)
        return A.seq(*s.stmts[:-1], _tail_returns(s.stmts[-1], ret, fname))
    if isinstance(s, A.If):
        return replace(s, then=_tail_returns(s.then, ret, fname), orelse=_tail_returns(s.orelse, ret, fname))
    if isinstance(s, A.Return):
        if s.value is None or ret is None:
            return A.Skip()
        return A.Assign(ret, (), s.value, span=s.span)
    _no_returns(s, fname)
    return s


def _no_returns(s, fname):
    for node in A.walk(s):
        if isinstance(node, A.Return):
            raise error(
                "unsupported-feature",
                f"'return' in function '{fname}' is only supported in tail position",
                node.span,
            )


def substitute(e, mapping: dict):
    if isinstance(e, A.Var):
        return mapping.get(e.name, e)
    if isinstance(e, A.Call):
        return replace(e, args=tuple(substitute(a, mapping) for a in e.args))
    if isinstance(e, A.Index):
        return replace(e, base=substitute(e.base, mapping), indices=tuple(substitute(i, mapping) for i in e.indices))
    if isinstance(e, (A.ArrayLit, A.VectorLit)):
        return replace(e, items=tuple(substitute(i, mapping) for i in e.items))
    if isinstance(e, A.MatrixLit):
        return replace(e, rows=tuple(tuple(substitute(i, mapping) for i in r) for r in e.rows))
    return e


def _rn(e, rename):
    return substitute(e, {k: A.Var(v) for k, v in rename.items()})


def rename_decl(d: A.Decl, rename: dict) -> A.Decl:
    def size(s):
        return s if isinstance(s, A.Wild) else _rn(s, rename)

    c = d.constraint
    constraint = A.Constraint(
        None if c.lower is None else _rn(c.lower, rename),
        None if c.upper is None else _rn(c.upper, rename),
    )
    dims = d.dims
    if isinstance(dims, tuple):
        dims = tuple(size(s) for s in dims)
    return replace(
        d,
        name=rename.get(d.name, d.name),
        base=A.BaseType(d.base.kind, tuple(size(s) for s in d.base.sizes)),
        constraint=constraint,
        dims=dims,
    )


def rename_stmt(s, rename: dict):
    r = lambda e: _rn(e, rename)  # noqa: E731
    if isinstance(s, A.Seq):
        return A.Seq(tuple(rename_stmt(x, rename) for x in s.stmts), span=s.span)
    if isinstance(s, A.Assign):
        return replace(s, name=rename.get(s.name, s.name), indices=tuple(map(r, s.indices)), value=r(s.value))
    if isinstance(s, A.ForRange):
        inner = {k: v for k, v in rename.items() if k != s.var}
        return replace(s, lo=r(s.lo), hi=r(s.hi), body=rename_stmt(s.body, inner))
    if isinstance(s, A.ForEach):
        inner = {k: v for k, v in rename.items() if k != s.var}
        return replace(s, iterable=r(s.iterable), body=rename_stmt(s.body, inner))
    if isinstance(s, A.While):
        return replace(s, cond=r(s.cond), body=rename_stmt(s.body, rename))
    if isinstance(s, A.If):
        return replace(s, cond=r(s.cond), then=rename_stmt(s.then, rename), orelse=rename_stmt(s.orelse, rename))
    if isinstance(s, A.TargetPlusEq):
        return replace(s, expr=r(s.expr))
    if isinstance(s, A.Tilde):
        return replace(s, lhs=r(s.lhs), args=tuple(map(r, s.args)))
    if isinstance(s, A.Return):
        return s if s.value is None else replace(s, value=r(s.value))
    if isinstance(s, A.CallStmt):
        return replace(s, args=tuple(map(r, s.args)))
    return s


_CODE_BLOCKS = ("transformed_data", "transformed_parameters", "model", "guide", "generated_quantities")


def inline_functions(program: A.Program) -> A.Program:
    """Replace every call to a user-defined function by its body."""
    if not program.functions:
        return program
    funs = {f.name: f for f in program.functions}
    _check_recursion(funs)
    blocks = {}
    for name in _CODE_BLOCKS:
        block = program.block(name)
        if block is None:
            continue
        inliner = _Inliner(funs)
        body = inliner.stmt(block.body)
        blocks[name] = A.Block(block.decls + tuple(inliner.new_decls), body)
    return replace(program, functions=(), **blocks)


# Kernel form


def kernelize(program: A.Program) -> A.Program:
    """Fold transformed data/parameters and generated quantities into the model.

    Declarations come first in block order (td, tp, model, gq), then the
    statements in the same order. Networks and guide blocks are kept since
    they are part of the extended language's model description.
    """
    program = inline_functions(program)
    parts = [program.block(n) for n in ("transformed_data", "transformed_parameters", "model", "generated_quantities")]
    parts = [b for b in parts if b is not None]
    decls = tuple(d for b in parts for d in b.decls)
    body = A.seq(*(b.body for b in parts))
    return replace(
        program,
        transformed_data=None,
        transformed_parameters=None,
        generated_quantities=None,
        model=A.Block(decls, body),
    )


def is_kernel(program: A.Program) -> bool:
    return (
        not program.functions
        and program.transformed_data is None
        and program.transformed_parameters is None
        and program.generated_quantities is None
    )


@dataclass(frozen=True)
class Phase:
    """A standalone pre- or post-processing function.

    ``inputs`` are the names the function reads from its caller, ``decls``
    and ``body`` compute the ``outputs``.
    """

    inputs: tuple
    decls: tuple
    body: A.Seq
    outputs: tuple


@dataclass(frozen=True)
class Phases:
    transformed_data: Phase
    model: A.Program
    generated_quantities: Phase


def split_phases(program: A.Program) -> Phases:
    """Split a program into transformed-data, model and generated-quantities parts.

    Transformed-data outputs become additional (named) data inputs of the
    model. Transformed-parameter code is inlined both in the model and in the
    generated-quantities function.
    """
    program = inline_functions(program)
    empty = A.Block()
    td = program.transformed_data or empty
    tp = program.transformed_parameters or empty
    gq = program.generated_quantities or empty
    data_names = tuple(d.name for d in program.decls("data"))
    td_names = tuple(d.name for d in td.decls)
    param_names = tuple(d.name for d in program.param_decls)
    td_phase = Phase(data_names, td.decls, td.body, td_names)
    model_block = A.Block(tp.decls + program.model.decls, A.seq(tp.body, program.model.body))
    data_block = A.Block(program.decls("data") + td.decls)
    model = replace(
        program,
        transformed_data=None,
        transformed_parameters=None,
        generated_quantities=None,
        data=data_block if data_block.decls else program.data,
        model=model_block,
    )
    gq_phase = Phase(
        data_names + td_names + param_names,
        tp.decls + gq.decls,
        A.seq(tp.body, gq.body),
        tuple(d.name for d in tp.decls + gq.decls),
    )
    return Phases(td_phase, model, gq_phase)


def allocation_schedule(decls, stmts) -> list[tuple]:
    """Group local declarations by the first top-level statement using them.

    Returns ``[(decls, stmt), ...]`` followed by a final ``(decls, None)``
    entry for locals no statement mentions. Allocating lazily like this lets
    sizes depend on values computed by earlier statements.
    """
    pending = list(decls)
    schedule = []
    for s in stmts:
        used = _names_in(s)
        now = [d for d in pending if d.name in used]
        pending = [d for d in pending if d.name not in used]
        schedule.append((tuple(now), s))
    schedule.append((tuple(pending), None))
    return schedule


def _names_in(s) -> set:
    names = set()
    for node in A.walk(s):
        if isinstance(node, A.Var):
            names.add(node.name)
        elif isinstance(node, A.Assign):
            names.add(node.name)
    return names
