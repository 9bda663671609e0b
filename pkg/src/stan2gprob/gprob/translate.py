"""Comprehensive translation of annotated kernel programs into GProb.

Every parameter is drawn first from a constant-density prior, then the
model statements are compiled in continuation-passing style: assignments
become lets, loops carry the variables they assign, ``target +=`` becomes
``factor`` and every tilde becomes ``observe``.
"""

from __future__ import annotations

import math

from ..diagnostics import NO_SPAN, CompileError, error
from ..frontend import ast as A
from ..normalize import Phase, allocation_schedule
from ..shapes.checker import AnnotatedProgram
from ..shapes.types import (
    ArrayDimT,
    ArrayT,
    DimVar,
    IntT,
    MatrixT,
    RealT,
    RowVectorT,
    ShapeList,
    ShapeOf,
    SizeVar,
    VectorT,
    free_vars,
    type_str,
)
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

INF = A.Const(math.inf)
NEG_INF = A.Const(-math.inf)


# types


def _levels(t):
    """Array sizes of ``t`` (outer first) and its element type."""
    sizes = []
    while isinstance(t, ArrayT):
        sizes.append(t.size)
        t = t.elem
    if isinstance(t, ArrayDimT):
        if isinstance(t.dim, ShapeList):
            sizes.extend(t.dim.sizes)
        else:
            sizes.append(t.dim)
        t = t.elem
    return sizes, t


def _base(t):
    if isinstance(t, IntT):
        return "int", ()
    if isinstance(t, RealT):
        return "real", ()
    if isinstance(t, VectorT):
        return "vector", (t.size,)
    if isinstance(t, RowVectorT):
        return "row_vector", (t.size,)
    if isinstance(t, MatrixT):
        return "matrix", (t.rows, t.cols)
    raise TypeError(t)


def type_desc(t, name: str = "value", span=NO_SPAN) -> TypeDesc | None:
    """Concrete shape of a resolved type; None for scalars.

    Raises ``ambiguous-shape`` when a size or shape is still unknown.
    """
    sizes, elem = _levels(t)
    kind, base_sizes = _base(elem)
    if not sizes and not base_sizes:
        return None
    s, d = free_vars(t)
    if s or d:
        raise error("ambiguous-shape", f"the shape of '{name}' ({type_str(t)}) is needed but cannot be determined", span)
    if sizes and isinstance(sizes[-1], ShapeOf):
        if len(sizes) != 1:
            raise error("unsupported-feature", f"'{name}' mixes explicit sizes with a runtime shape", span)
        return TypeDesc(kind, tuple(base_sizes), A.Call("shape", (sizes[0].expr,)))
    return TypeDesc(kind, tuple(base_sizes), tuple(sizes))


def _alloc_expr(t):
    """Initial value of a local: NaN-filled reals, zero ints, unknown shapes undefined."""
    if isinstance(t, RealT):
        return A.Call("not_a_number", ())
    if isinstance(t, IntT):
        return A.Const(0)
    try:
        td = type_desc(t)
    except CompileError:
        return A.Call("undefined", ())
    dims = td.dims if isinstance(td.dims, A.Call) else A.ArrayLit(tuple(td.dims))
    return A.Call("empty_" + td.kind, tuple(td.sizes) + (dims,))


def _with_allocs(ann: AnnotatedProgram, decls, k):
    for d in reversed(decls):
        k = Let(PVar(d.name), Return(_alloc_expr(ann.types[d.name])), k)
    return k


# parameters


def prior(d: A.Decl) -> A.Call:
    lo, hi = d.constraint.lower, d.constraint.upper
    if lo is not None and hi is not None:
        return A.Call("uniform", (lo, hi))
    return A.Call("improper_uniform", (lo if lo is not None else NEG_INF, hi if hi is not None else INF))


def compile_params(ann: AnnotatedProgram, decls, k):
    """``let x1 = sample(D1) in ... let xn = sample(Dn) in k``."""
    for d in reversed(decls):
        vt = type_desc(ann.types[d.name], d.name, d.span)
        k = Let(PVar(d.name), Sample(prior(d), vt), k)
    return k


def params_value(names):
    if not names:
        return Unit()
    if len(names) == 1:
        return A.Var(names[0])
    return TupleE(tuple(A.Var(n) for n in names))


# statements


def lhs_vars(stmt) -> tuple:
    """Assigned base names in order of first assignment (loop indices excluded)."""
    out: list = []
    for node in A.walk(stmt):
        if isinstance(node, A.Assign) and node.name not in out:
            out.append(node.name)
    return tuple(out)


def _sizes_known(sizes) -> bool:
    return all(not isinstance(s, (SizeVar, DimVar, ShapeOf)) for s in sizes)


def _lift(arg, formal, actual, refs):
    """Make the implicit vectorization of one tilde argument explicit."""
    if isinstance(formal, (VectorT, RowVectorT)):
        fn = "rep_vector" if isinstance(formal, VectorT) else "rep_row_vector"
        if isinstance(formal.size, SizeVar):
            ref = next((e for e, t in refs if isinstance(t, type(formal))), None)
            if ref is None:
                return arg
            return A.Call(fn, (arg, A.Call("size", (ref,))))
        return A.Call(fn, (arg, formal.size))
    fsizes, felem = _levels(formal)
    asizes, _ = _levels(actual)
    outer = fsizes[: len(fsizes) - len(asizes)]
    if len(outer) == 1 and isinstance(outer[0], ShapeOf) and not asizes:
        return A.Call("broadcast", (arg, A.Call("shape", (outer[0].expr,))))
    if outer and _sizes_known(outer):
        return A.Call("broadcast", (arg, A.ArrayLit(tuple(outer))))
    if not asizes and isinstance(felem, (RealT, IntT)):
        ref = next((e for e, t in refs if _levels(t)[0] and len(_levels(t)[0]) == len(fsizes)), None)
        if ref is not None:
            return A.Call("broadcast", (arg, A.Call("shape", (ref,))))
    return arg


def explicit_tilde(ann: AnnotatedProgram, s: A.Tilde):
    """Observed expression and distribution call with every lift made explicit."""
    info = ann.tildes.get(id(s))
    exprs = (s.lhs,) + tuple(s.args)
    if info is None or not any(info.lifted):
        return s.lhs, A.Call(s.dist, tuple(s.args))
    refs = [(e, a) for e, a, lifted in zip(exprs, info.actuals, info.lifted) if not lifted]
    out = [
        _lift(e, f, a, refs) if lifted else e
        for e, f, a, lifted in zip(exprs, info.formals, info.actuals, info.lifted)
    ]
    return out[0], A.Call(s.dist, tuple(out[1:]))


class _Compiler:
    def __init__(self, ann: AnnotatedProgram, sampled: frozenset = frozenset()):
        self.ann = ann
        self.sampled = sampled  # parameters drawn by guide tildes

    def seq(self, stmts, k):
        for s in reversed(stmts):
            k = self.stmt(s, k)
        return k

    def stmt(self, s, k):
        if isinstance(s, A.Seq):
            return self.seq(s.stmts, k)
        if isinstance(s, A.Assign):
            if s.indices:
                return Let(PIndex(s.name, tuple(s.indices)), s.value, k)
            return Let(PVar(s.name), Return(s.value), k)
        if isinstance(s, A.Skip):
            return k
        if isinstance(s, A.TargetPlusEq):
            return Let(PUnit(), Factor(s.expr), k)
        if isinstance(s, A.Tilde):
            lhs, dist = explicit_tilde(self.ann, s)
            if isinstance(s.lhs, A.Var) and s.lhs.name in self.sampled:
                return Let(PVar(s.lhs.name), Sample(dist), k)
            return Let(PUnit(), Observe(dist, lhs), k)
        if isinstance(s, A.If):
            return If(s.cond, self.stmt(s.then, k), self.stmt(s.orelse, k))
        if isinstance(s, A.ForRange):
            state = lhs_vars(s.body)
            body = self.stmt(s.body, Return(_state_value(state)))
            return Let(_state_pattern(state), For(state, s.var, s.lo, s.hi, body), k)
        if isinstance(s, A.While):
            state = lhs_vars(s.body)
            body = self.stmt(s.body, Return(_state_value(state)))
            return Let(_state_pattern(state), While(state, s.cond, body), k)
        if isinstance(s, A.ForEach):
            return self.foreach(s, k)
        raise error("unsupported-feature", f"cannot compile {type(s).__name__}", getattr(s, "span", NO_SPAN))

    def foreach(self, s: A.ForEach, k):
        coll, i = f"{s.var}__coll", f"{s.var}__i"
        state = tuple(n for n in lhs_vars(s.body) if n != s.var)
        ret = Return(_state_value(state))
        t = self.ann.iterables.get(id(s))
        cv = A.Var(coll)
        if isinstance(t, MatrixT):
            j = f"{s.var}__j"
            inner = Let(PVar(s.var), Return(A.Index(cv, (A.Var(i), A.Var(j)))), self.stmt(s.body, ret))
            inner_loop = For(state, j, A.Const(1), A.Call("cols", (cv,)), inner)
            body = Let(_state_pattern(state), inner_loop, ret)
            loop = For(state, i, A.Const(1), A.Call("rows", (cv,)), body)
        else:
            body = Let(PVar(s.var), Return(A.Index(cv, (A.Var(i),))), self.stmt(s.body, ret))
            loop = For(state, i, A.Const(1), A.Call("size", (cv,)), body)
        return Let(PVar(coll), Return(s.iterable), Let(_state_pattern(state), loop, k))

    def block(self, decls, stmts, k):
        """Statements with each local allocated right before its first use."""
        for group, s in reversed(allocation_schedule(decls, stmts)):
            if s is not None:
                k = self.stmt(s, k)
            k = _with_allocs(self.ann, group, k)
        return k


def _state_pattern(state):
    return PTuple(tuple(state)) if state else PUnit()


def _state_value(state):
    return TupleE(tuple(A.Var(n) for n in state)) if state else Unit()


def compile_stmt(stmt, k, ann: AnnotatedProgram):
    return _Compiler(ann).stmt(stmt, k)


def compile_program(ann: AnnotatedProgram):
    """Parameters' priors, then the model statements, returning the parameters."""
    p = ann.program
    names = [d.name for d in p.param_decls]
    c = _Compiler(ann)
    body = c.block(p.model.decls, p.model.body.stmts, Return(params_value(names)))
    return compile_params(ann, p.param_decls, body)


def compile_guide(ann: AnnotatedProgram):
    """Generative translation of the guide: learnable parameters, then draws."""
    p = ann.program
    if p.guide is None:
        return None
    names = [d.name for d in p.param_decls]
    c = _Compiler(ann, frozenset(names))
    k = c.block(p.guide.decls, p.guide.body.stmts, Return(params_value(names)))
    for d in reversed(p.decls("guide_parameters")):
        vt = type_desc(ann.types[d.name], d.name, d.span) or TypeDesc(_base(ann.types[d.name])[0])
        k = Let(PVar(d.name), Param(vt), k)
    return k


def compile_phase(phase: Phase, ann: AnnotatedProgram):
    """A pre- or post-processing function returning its outputs."""
    return _Compiler(ann).block(phase.decls, phase.body.stmts, Return(_state_value(phase.outputs)))
