"""Size and shape inference for kernel programs."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..diagnostics import NO_SPAN, CompileError, Diagnostic, error
from ..frontend import ast as A
from ..normalize import is_kernel, kernelize
from .registry import Param, Registry, Schema, default_registry, instantiate
from .types import (
    INT,
    REAL,
    ArrayDimT,
    ArrayT,
    DimVar,
    IntT,
    MatrixT,
    NetworkT,
    RealT,
    RowVectorT,
    ShapeOf,
    VectorT,
    free_vars,
    is_scalar,
    nest,
    type_str,
)
from .unify import Unifier


@dataclass
class TildeInfo:
    """Resolved formal/actual types of a tilde, observed position first."""

    schema: str
    formals: tuple
    actuals: tuple
    lifted: tuple


@dataclass
class AnnotatedProgram:
    program: A.Program
    types: dict
    order: list
    tildes: dict = field(default_factory=dict)
    iterables: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    assertions: list = field(default_factory=list)

    def tilde(self, node: A.Tilde) -> TildeInfo:
        return self.tildes[id(node)]

    def type_of(self, name: str):
        return self.types[name]

    def type_lines(self) -> list[str]:
        return [f"{n} : {type_str(self.types[n])}" for n in self.order]


def _lift_rules(u: Unifier, formal, actual, span, sub: bool = True):
    """Non-reflexive vectorization steps from a formal to an actual type."""
    f = u.shallow(formal)
    a = u.shallow(actual)
    rules = []
    if isinstance(f, ArrayT):
        rules.append(lambda t: t.unify(f.elem, a, span, sub=sub))
        elem = t_elem = u.shallow(f.elem)
        if isinstance(elem, VectorT) and isinstance(a, RowVectorT):
            rules.append(lambda t: t.unify_size(t_elem.size, a.size, span))
        if isinstance(elem, RowVectorT) and isinstance(a, VectorT):
            rules.append(lambda t: t.unify_size(t_elem.size, a.size, span))
    elif isinstance(f, ArrayDimT):
        rules.append(lambda t: t.unify(f.elem, a, span, sub=sub))
    elif isinstance(f, (VectorT, RowVectorT)) and (is_scalar(a) if sub else isinstance(a, RealT)):
        rules.append(lambda t: None)
    return rules


def match_arg(u: Unifier, formal, actual, flag: bool, span=NO_SPAN, sub: bool = True):
    """Unify ``formal`` with ``actual`` directly or by one lift.

    Returns the number of lifts used (0 or 1) or None on failure; on
    success ``u`` holds the extended substitution.
    """
    t = u.fork()
    try:
        t.unify(formal, actual, span, sub=sub)
        u.adopt(t)
        return 0
    except CompileError:
        pass
    if not flag:
        return None
    for rule in _lift_rules(u, formal, actual, span, sub):
        t = u.fork()
        try:
            rule(t)
        except CompileError:
            continue
        u.adopt(t)
        return 1
    return None


def vectorize(flag: bool, formal, actual) -> bool:
    """The vectorization relation on (ground) types, without subsumption."""
    return match_arg(Unifier(), formal, actual, flag, sub=False) is not None


class Checker:
    def __init__(self, program: A.Program, registry: Registry | None = None):
        self.program = program
        self.registry = registry or default_registry()
        self.u = Unifier()
        self.env: dict = {}
        self.order: list = []
        self.networks: dict = {}
        self.tildes: dict = {}
        self.iterables: dict = {}
        self.diags: list = []

    # declarations

    def size(self, s, span):
        if isinstance(s, A.Wild):
            return self.u.fresh_size()
        t = self.expr(s)
        if not isinstance(self.u.shallow(t), IntT):
            raise error("type-mismatch", f"size expression has type {type_str(self.u.apply(t))}, expected int", span)
        return s

    def decl(self, d: A.Decl):
        kind, sizes = d.base.kind, [self.size(s, d.span) for s in d.base.sizes]
        base = {
            "int": lambda: INT,
            "real": lambda: REAL,
            "vector": lambda: VectorT(sizes[0]),
            "row_vector": lambda: RowVectorT(sizes[0]),
            "matrix": lambda: MatrixT(sizes[0], sizes[1]),
        }[kind]()
        if isinstance(d.dims, A.Star):
            t = ArrayDimT(base, self.u.fresh_dim())
        elif d.dims is not None:
            t = nest(base, [self.size(s, d.span) for s in d.dims])
        else:
            t = base
        for bound in (d.constraint.lower, d.constraint.upper):
            if bound is not None:
                self.expr(bound)
        self.env[d.name] = t
        self.order.append(d.name)
        return t

    # expressions

    def expr(self, e):
        if isinstance(e, A.Const):
            return INT if isinstance(e.value, int) else REAL
        if isinstance(e, A.Var):
            if e.name in self.networks:
                raise error("type-mismatch", f"network '{e.name}' used as a value", e.span)
            if e.name not in self.env:
                raise error("undeclared-name", f"'{e.name}' is not declared", e.span)
            return self.env[e.name]
        if isinstance(e, A.ArrayLit):
            types = [self.expr(x) for x in e.items]
            elem = types[0]
            for t in types[1:]:
                if match_arg(self.u, elem, t, False, e.span) is None:
                    if match_arg(self.u, t, elem, False, e.span) is None:
                        raise error("type-mismatch", "array literal elements have different types", e.span)
                    elem = t
            return ArrayT(elem, A.Const(len(types)))
        if isinstance(e, A.VectorLit):
            for x in e.items:
                if match_arg(self.u, REAL, self.expr(x), False, e.span) is None:
                    raise error("type-mismatch", "vector literal elements must be scalars", e.span)
            return VectorT(A.Const(len(e.items)))
        if isinstance(e, A.MatrixLit):
            ncols = {len(r) for r in e.rows}
            if len(ncols) != 1:
                raise error("type-mismatch", "matrix literal rows have different lengths", e.span)
            for row in e.rows:
                for x in row:
                    if match_arg(self.u, REAL, self.expr(x), False, e.span) is None:
                        raise error("type-mismatch", "matrix literal elements must be scalars", e.span)
            return MatrixT(A.Const(len(e.rows)), A.Const(ncols.pop()))
        if isinstance(e, A.Index):
            t = self.expr(e.base)
            for idx in e.indices:
                t = self.index(t, self.expr(idx), e.span)
            return t
        if isinstance(e, A.Call):
            return self.call(e)
        raise TypeError(e)

    def index(self, t, it, span):
        t = self.u.shallow(t)
        it = self.u.shallow(it)
        if isinstance(it, IntT):
            multi = None
        elif isinstance(it, ArrayT) and isinstance(self.u.shallow(it.elem), IntT):
            multi = it.size
        else:
            raise error("type-mismatch", f"index has type {type_str(self.u.apply(it))}, expected int", span)
        if isinstance(t, ArrayT):
            return t.elem if multi is None else ArrayT(t.elem, multi)
        if isinstance(t, VectorT):
            return REAL if multi is None else VectorT(multi)
        if isinstance(t, RowVectorT):
            return REAL if multi is None else RowVectorT(multi)
        if isinstance(t, MatrixT):
            return RowVectorT(t.cols) if multi is None else MatrixT(multi, t.cols)
        if isinstance(t, ArrayDimT):
            raise error("ambiguous-shape", "cannot index an array whose shape is not yet known", span)
        raise error("type-mismatch", f"cannot index a value of type {type_str(self.u.apply(t))}", span)

    def call(self, e: A.Call):
        if e.name in self.networks:
            din, dout = self.networks[e.name]
            if len(e.args) != 1:
                raise error("arity-mismatch", f"network '{e.name}' takes one argument", e.span)
            if match_arg(self.u, din, self.expr(e.args[0]), False, e.span) is None:
                raise error("type-mismatch", f"invalid input for network '{e.name}'", e.span)
            return dout
        cands = self.registry.candidates(e.name)
        if not cands:
            raise error("unknown-function", f"unknown function '{e.name}'", e.span)
        actuals = [self.expr(a) for a in e.args]
        result, _ = self.resolve(e.name, cands, actuals, list(e.args), e.span)
        return result

    def resolve(self, name, cands, actuals, arg_exprs, span):
        best = None
        for order, schema in enumerate(cands):
            if len(schema.params) != len(actuals):
                continue
            t = self.u.fork()
            params, result, names = instantiate(schema, t)
            lifts, lifted, ok = 0, [], True
            for p, a, ex in zip(params, actuals, arg_exprs):
                n = match_arg(t, p.type, a, p.lift, span)
                if n is None:
                    ok = False
                    break
                lifts += n
                lifted.append(bool(n))
                if p.bind is not None:
                    t.unify_size(names[p.bind], ex, span)
            if ok and (best is None or lifts < best[0]):
                best = (lifts, order, t, result, params, tuple(lifted), schema)
        if best is None:
            got = ", ".join(type_str(self.u.apply(a)) for a in actuals)
            tried = "; ".join(s.signature() for s in cands)
            raise error("type-mismatch", f"no signature of '{name}' accepts ({got}); tried: {tried}", span)
        _, _, t, result, params, lifted, schema = best
        self.u.adopt(t)
        return result, (params, lifted, schema)

    # statements

    def lvalue(self, s: A.Assign):
        if s.name not in self.env:
            raise error("undeclared-name", f"'{s.name}' is not declared", s.span)
        t = self.env[s.name]
        for idx in s.indices:
            t = self.index(t, self.expr(idx), s.span)
        return t

    def stmt(self, s):
        if isinstance(s, A.Seq):
            for x in s.stmts:
                self.guarded(x)
            return
        if isinstance(s, A.Assign):
            lhs = self.lvalue(s)
            rhs = self.expr(s.value)
            self.u.unify(lhs, rhs, s.span, sub=True)
            return
        if isinstance(s, A.ForRange):
            for bound in (s.lo, s.hi):
                if not isinstance(self.u.shallow(self.expr(bound)), IntT):
                    raise error("type-mismatch", "loop bounds must be int", s.span)
            self.scoped(s.var, INT, s.body)
            return
        if isinstance(s, A.ForEach):
            t = self.u.shallow(self.expr(s.iterable))
            self.iterables[id(s)] = t
            if isinstance(t, ArrayT):
                elem = t.elem
            elif isinstance(t, (VectorT, RowVectorT, MatrixT)):
                elem = REAL
            elif isinstance(t, ArrayDimT):
                raise error("ambiguous-shape", "cannot iterate over an array whose shape is not yet known", s.span)
            else:
                raise error("type-mismatch", f"cannot iterate over {type_str(self.u.apply(t))}", s.span)
            self.scoped(s.var, elem, s.body)
            return
        if isinstance(s, (A.While, A.If)):
            if not is_scalar(self.u.shallow(self.expr(s.cond))):
                raise error("type-mismatch", "condition must be int or real", s.span)
            if isinstance(s, A.While):
                self.stmt(s.body)
            else:
                self.stmt(s.then)
                self.stmt(s.orelse)
            return
        if isinstance(s, A.Skip):
            return
        if isinstance(s, A.TargetPlusEq):
            t = self.expr(s.expr)
            if match_arg(self.u, REAL, t, False, s.span) is None:
                raise error("type-mismatch", f"target increment has type {type_str(self.u.apply(t))}, expected real", s.span)
            return
        if isinstance(s, A.Tilde):
            self.tilde(s)
            return
        raise error("syntax-error", f"unexpected statement {type(s).__name__}", getattr(s, "span", NO_SPAN))

    def tilde(self, s: A.Tilde):
        if not self.registry.is_distribution(s.dist):
            raise error("unknown-distribution", f"'{s.dist}' is not a distribution", s.span)
        obs = self.expr(s.lhs)
        actuals = [obs] + [self.expr(a) for a in s.args]
        schemas = [
            Schema("dist", s.dist, (Param(c.result, True),) + c.params, REAL, c.container)
            for c in self.registry.distributions[s.dist]
        ]
        _, (params, lifted, schema) = self.resolve(s.dist, schemas, actuals, [s.lhs, *s.args], s.span)
        self.tildes[id(s)] = (schema.signature(), tuple(p.type for p in params), tuple(actuals), lifted)

    def scoped(self, var, t, body):
        saved = self.env.get(var, _MISSING)
        self.env[var] = t
        try:
            self.stmt(body)
        finally:
            if saved is _MISSING:
                del self.env[var]
            else:
                self.env[var] = saved

    def guarded(self, s):
        try:
            self.stmt(s)
        except CompileError as exc:
            self.diags.extend(exc.diagnostics)

    def guarded_decl(self, d):
        try:
            self.decl(d)
        except CompileError as exc:
            self.diags.extend(exc.diagnostics)
            self.env[d.name] = ArrayDimT(REAL, self.u.fresh_dim())
            self.order.append(d.name)

    # driver

    def run(self) -> AnnotatedProgram:
        p = self.program
        for n in p.networks:
            self.networks[n.name] = (ArrayDimT(REAL, self.u.fresh_dim()), ArrayDimT(REAL, self.u.fresh_dim()))
            self.order.append(n.name)
        for block in ("data", "parameters"):
            for d in p.decls(block):
                self.guarded_decl(d)
        for d in p.model.decls:
            self.guarded_decl(d)
        self.guarded(p.model.body)
        for d in p.decls("guide_parameters"):
            self.guarded_decl(d)
        if p.guide is not None:
            for d in p.guide.decls:
                self.guarded_decl(d)
            self.guarded(p.guide.body)
        errors = [d for d in self.diags if d.severity == "error"]
        if errors:
            raise CompileError(errors)
        # residual shapes of network parameters are those of the network
        for d in p.param_decls:
            t = self.u.shallow(self.env[d.name])
            if A.is_network_path(d.name) and isinstance(t, ArrayDimT) and isinstance(t.dim, DimVar):
                self.u.unify_dim(t.dim, ShapeOf(A.Var(d.name)))
        types = {}
        warnings = []
        for name in self.order:
            if name in self.networks:
                types[name] = NetworkT(next(n.cls for n in p.networks if n.name == name))
                continue
            t = self.u.apply(self.env[name])
            types[name] = t
            sizes, dims = free_vars(t)
            if sizes or dims:
                warnings.append(
                    Diagnostic(
                        "ambiguous-shape",
                        f"the shape of '{name}' cannot be determined ({type_str(t)})",
                        _decl_span(p, name),
                        "warning",
                    )
                )
        tildes = {
            k: TildeInfo(sig, tuple(map(self.u.apply, f)), tuple(map(self.u.apply, a)), lifted)
            for k, (sig, f, a, lifted) in self.tildes.items()
        }
        iterables = {k: self.u.apply(t) for k, t in self.iterables.items()}
        return AnnotatedProgram(p, types, list(self.order), tildes, iterables, warnings, list(self.u.assertions))


_MISSING = object()


def _decl_span(p: A.Program, name: str):
    for _, d in p.all_decls():
        if d.name == name:
            return d.span
    return NO_SPAN


def resolve_program(program: A.Program, registry: Registry | None = None) -> AnnotatedProgram:
    """Infer every declaration's type; kernelizes the program first if needed."""
    if not is_kernel(program):
        program = kernelize(program)
    return Checker(program, registry).run()
