"""Recursive-descent parser for extended Stan.

Parsing also performs the program-level checks that only need the AST:
block presence and order, program-wide name uniqueness, scoping, read-only
assignment targets and rejection of unsupported features.
"""

from __future__ import annotations

from typing import Optional

from ..diagnostics import CompileError, Diagnostic, Span, error
from . import ast as A
from .lexer import Token, lex

TYPE_KINDS = {
    "INT_TYPE": "int",
    "REAL": "real",
    "VECTOR": "vector",
    "ROW_VECTOR": "row_vector",
    "MATRIX": "matrix",
}

_MUL_OPS = {"STAR": "*", "SLASH": "/", "PERCENT": "%", "ELTTIMES": ".*", "ELTDIV": "./"}
_ADD_OPS = {"PLUS": "+", "MINUS": "-"}
_CMP_OPS = {"LT": "<", "LEQ": "<=", "GT": ">", "GEQ": ">="}
_EQ_OPS = {"EQEQ": "==", "NEQ": "!="}
_COMPOUND = {"PLUSEQ": "+", "MINUSEQ": "-", "TIMESEQ": "*", "DIVEQ": "/"}

UNSUPPORTED_CALL_SUFFIXES = ("_rng",)
UNSUPPORTED_FUNCTION_SUFFIXES = ("_lpdf", "_lpmf", "_lcdf", "_lccdf", "_rng")
UNSUPPORTED_CALLS = {
    "integrate_ode",
    "integrate_ode_rk45",
    "integrate_ode_bdf",
    "integrate_ode_adams",
    "ode_rk45",
    "ode_bdf",
    "ode_adams",
    "algebra_solver",
}


def parse(tokens_or_source) -> A.Program:
    """Parse a token list (or raw source text) into a checked program."""
    if isinstance(tokens_or_source, str):
        tokens = lex(tokens_or_source)
    else:
        tokens = list(tokens_or_source)
    program = _Parser(tokens).program()
    check_program(program)
    return program


def parse_expression(source: str) -> A.Expr:
    p = _Parser(lex(source))
    e = p.expr()
    p.expect("EOF")
    return e


def parse_statement(source: str) -> A.Stmt:
    p = _Parser(lex(source))
    p.decl_sink = []
    s = p.statement()
    p.expect("EOF")
    return s


class _Parser:
    def __init__(self, tokens: list[Token]):
        end = tokens[-1].span if tokens else Span(1, 1)
        self.tokens = tokens + [Token("EOF", None, end)]
        self.pos = 0
        self.decl_sink: Optional[list] = None
        self.block_name = ""

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, *kinds: str) -> bool:
        return self.tok.kind in kinds

    def next(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def accept(self, kind: str) -> Optional[Token]:
        if self.tok.kind == kind:
            return self.next()
        return None

    def expect(self, kind: str, what: str = "") -> Token:
        if self.tok.kind != kind:
            found = "end of input" if self.tok.kind == "EOF" else repr(self.tok)
            raise error("syntax-error", f"expected {what or kind}, found {found}", self.tok.span)
        return self.next()

    # program structure

    def program(self) -> A.Program:
        blocks: dict = {}
        last_rank = -1
        while not self.at("EOF"):
            span = self.tok.span
            name = self.block_header()
            rank = A.BLOCK_ORDER.index(name)
            title = A.BLOCK_TITLES[name]
            if name in blocks:
                raise error("duplicate-block", f"block '{title}' appears more than once", span)
            if rank < last_rank:
                raise error("block-order", f"block '{title}' is out of order", span)
            last_rank = rank
            self.expect("LBRACE", "'{'")
            self.block_name = name
            if name == "functions":
                blocks[name] = self.functions_body()
            elif name == "networks":
                blocks[name] = self.networks_body()
            else:
                blocks[name] = self.block_body(name)
            self.expect("RBRACE", "'}'")
        if "model" not in blocks:
            raise error("missing-model", "program has no model block", self.tok.span)
        return A.Program(**blocks)

    def block_header(self) -> str:
        t = self.next()
        k = t.kind
        if k == "FUNCTIONS":
            return "functions"
        if k == "NETWORKS":
            return "networks"
        if k == "DATA":
            return "data"
        if k == "PARAMETERS":
            return "parameters"
        if k == "MODEL":
            return "model"
        if k == "TRANSFORMED":
            if self.accept("DATA"):
                return "transformed_data"
            if self.accept("PARAMETERS"):
                return "transformed_parameters"
            raise error("syntax-error", "expected 'data' or 'parameters' after 'transformed'", self.tok.span)
        if k == "GENERATED":
            self.expect("QUANTITIES", "'quantities'")
            return "generated_quantities"
        if k == "GUIDE":
            if self.accept("PARAMETERS"):
                return "guide_parameters"
            return "guide"
        raise error("syntax-error", f"expected a block name, found {t!r}", t.span)

    def networks_body(self) -> tuple:
        decls = []
        while not self.at("RBRACE"):
            cls = self.expect("ID", "network class name")
            name = self.expect("ID", "network name")
            self.expect("SEMI", "';'")
            decls.append(A.NetworkDecl(cls.value, name.value, span=cls.span))
        return tuple(decls)

    def functions_body(self) -> tuple:
        funs = []
        while not self.at("RBRACE"):
            span = self.tok.span
            ret = self.fun_type(allow_void=True)
            name_tok = self.expect("ID", "function name")
            name = name_tok.value
            if name.endswith(UNSUPPORTED_FUNCTION_SUFFIXES):
                raise error(
                    "unsupported-feature",
                    f"user-defined distribution function '{name}' is not supported",
                    name_tok.span,
                )
            self.expect("LPAREN", "'('")
            params = []
            while not self.at("RPAREN"):
                if self.tok.kind == "DATA":
                    self.next()
                ptype = self.fun_type(allow_void=False)
                pname = self.expect("ID", "parameter name").value
                params.append((ptype, pname))
                if not self.accept("COMMA"):
                    break
            self.expect("RPAREN", "')'")
            saved = self.decl_sink
            self.decl_sink = []
            self.expect("LBRACE", "'{'")
            stmts = self.statements_until_rbrace()
            self.expect("RBRACE", "'}'")
            local_decls = tuple(self.decl_sink)
            self.decl_sink = saved
            body = A.seq(*stmts)
            funs.append(A.FunDecl(ret, name, tuple(params), body, local_decls, span=span))
        return tuple(funs)

    def fun_type(self, allow_void: bool) -> A.FunType:
        t = self.next()
        if t.kind == "VOID" and allow_void:
            return A.FunType("void")
        if t.kind not in TYPE_KINDS:
            raise error("syntax-error", f"expected a type, found {t!r}", t.span)
        ndims = 0
        if self.accept("LBRACK"):
            ndims = 1
            while self.accept("COMMA"):
                ndims += 1
            self.expect("RBRACK", "']'")
        return A.FunType(TYPE_KINDS[t.kind], ndims)

    def block_body(self, name: str) -> A.Block:
        self.decl_sink = []
        stmts = self.statements_until_rbrace(top_level=True)
        decls = tuple(self.decl_sink)
        self.decl_sink = None
        if name in ("data", "parameters", "guide_parameters") and stmts:
            raise error(
                "syntax-error",
                f"block '{A.BLOCK_TITLES[name]}' may only contain declarations",
                stmts[0].span,
            )
        return A.Block(decls, A.seq(*stmts))

    def statements_until_rbrace(self, top_level: bool = False) -> list:
        stmts = []
        while not self.at("RBRACE", "EOF"):
            if self.tok.kind in TYPE_KINDS:
                init = self.declaration(top_level)
                if init is not None:
                    stmts.append(init)
            else:
                stmts.append(self.statement())
        return stmts

    # declarations

    def declaration(self, top_level: bool) -> Optional[A.Assign]:
        span = self.tok.span
        kind = TYPE_KINDS[self.next().kind]
        constraint = A.NO_CONSTRAINT
        if self.at("LT"):
            constraint = self.constraint()
        sizes: tuple = ()
        if kind in ("vector", "row_vector", "matrix"):
            self.expect("LBRACK", "'['")
            sizes = tuple(self.size_list())
            self.expect("RBRACK", "']'")
            expected = 2 if kind == "matrix" else 1
            if len(sizes) != expected:
                raise error("syntax-error", f"{kind} takes {expected} size(s)", span)
        name_tok = self.expect("ID", "variable name")
        name = name_tok.value
        dims = None
        if self.accept("LBRACK"):
            if self.at("STAR"):
                star = self.next()
                dims = A.Star(span=star.span)
            else:
                dims = tuple(self.size_list())
            self.expect("RBRACK", "']'")
        init = None
        if self.accept("ASSIGN"):
            init = self.expr()
        self.expect("SEMI", "';'")
        decl = A.Decl(A.BaseType(kind, sizes), name, constraint, dims, span=span)
        self.check_decl_context(decl, name_tok.span)
        self.decl_sink.append(decl)
        if init is not None:
            return A.Assign(name, (), init, span=span)
        return None

    def check_decl_context(self, decl: A.Decl, span: Span) -> None:
        block = self.block_name
        wild = any(isinstance(s, A.Wild) for s in decl.base.sizes) or (
            isinstance(decl.dims, tuple) and any(isinstance(s, A.Wild) for s in decl.dims)
        )
        if block == "data" and (wild or isinstance(decl.dims, A.Star)):
            raise error("wildcard-in-data", f"data variable '{decl.name}' must have explicit sizes", span)
        if A.is_network_path(decl.name) and block != "parameters":
            raise error(
                "syntax-error",
                f"dotted name '{decl.name}' may only be declared in the parameters block",
                span,
            )

    def constraint(self) -> A.Constraint:
        self.expect("LT", "'<'")
        lower = upper = None
        while True:
            t = self.expect("ID", "'lower' or 'upper'")
            if t.value not in ("lower", "upper"):
                if t.value in ("offset", "multiplier"):
                    raise error("unsupported-feature", f"'{t.value}' constraints are not supported", t.span)
                raise error("syntax-error", f"unknown constraint '{t.value}'", t.span)
            self.expect("ASSIGN", "'='")
            bound = self.additive()
            if t.value == "lower":
                if lower is not None:
                    raise error("syntax-error", "duplicate lower bound", t.span)
                lower = bound
            else:
                if upper is not None:
                    raise error("syntax-error", "duplicate upper bound", t.span)
                upper = bound
            if not self.accept("COMMA"):
                break
        self.expect("GT", "'>'")
        return A.Constraint(lower, upper)

    def size_list(self) -> list:
        sizes = []
        while True:
            if self.at("UNDERSCORE"):
                sizes.append(A.Wild(span=self.next().span))
            else:
                sizes.append(self.expr())
            if not self.accept("COMMA"):
                return sizes

    # statements

    def statement(self) -> A.Stmt:
        t = self.tok
        span = t.span
        k = t.kind
        if k == "LBRACE":
            self.next()
            stmts = self.statements_until_rbrace()
            self.expect("RBRACE", "'}'")
            return A.seq(*stmts) if len(stmts) != 1 else stmts[0]
        if k == "SEMI":
            self.next()
            return A.Skip(span=span)
        if k == "FOR":
            self.next()
            self.expect("LPAREN", "'('")
            var = self.expect("ID", "loop variable").value
            self.expect("IN", "'in'")
            first = self.expr()
            if self.accept("COLON"):
                hi = self.expr()
                self.expect("RPAREN", "')'")
                return A.ForRange(var, first, hi, self.statement(), span=span)
            self.expect("RPAREN", "')'")
            return A.ForEach(var, first, self.statement(), span=span)
        if k == "WHILE":
            self.next()
            self.expect("LPAREN", "'('")
            cond = self.expr()
            self.expect("RPAREN", "')'")
            return A.While(cond, self.statement(), span=span)
        if k == "IF":
            self.next()
            self.expect("LPAREN", "'('")
            cond = self.expr()
            self.expect("RPAREN", "')'")
            then = self.statement()
            orelse: A.Stmt = A.Skip()
            if self.accept("ELSE"):
                orelse = self.statement()
            return A.If(cond, then, orelse, span=span)
        if k == "TARGET" and self.peek().kind == "PLUSEQ":
            self.next()
            self.next()
            e = self.expr()
            self.expect("SEMI", "';'")
            return A.TargetPlusEq(e, span=span)
        if k == "RETURN":
            self.next()
            value = None if self.at("SEMI") else self.expr()
            self.expect("SEMI", "';'")
            return A.Return(value, span=span)
        if k in ("PRINT", "REJECT"):
            raise error("unsupported-feature", f"'{'print' if k == 'PRINT' else 'reject'}' is not supported", span)
        lhs = self.expr()
        if self.at("ASSIGN") or self.tok.kind in _COMPOUND:
            op = self.next()
            value = self.expr()
            self.expect("SEMI", "';'")
            name, indices = _lvalue(lhs, span)
            if op.kind in _COMPOUND:
                value = A.Call(A.BINARY_OPS[_COMPOUND[op.kind]], (lhs, value), span=op.span)
            return A.Assign(name, indices, value, span=span)
        if self.accept("TILDE"):
            dist_tok = self.expect("ID", "distribution name")
            self.expect("LPAREN", "'('")
            args = self.arguments()
            if self.at("ID") and self.tok.value == "T" and self.peek().kind == "LBRACK":
                raise error("unsupported-feature", "truncation is not supported", self.tok.span)
            self.expect("SEMI", "';'")
            if dist_tok.value.endswith(UNSUPPORTED_CALL_SUFFIXES):
                raise error("unsupported-feature", f"'{dist_tok.value}' is not supported", dist_tok.span)
            return A.Tilde(lhs, dist_tok.value, tuple(args), span=span)
        if self.at("SEMI") and isinstance(lhs, A.Call):
            self.next()
            return A.CallStmt(lhs.name, lhs.args, span=span)
        raise error("syntax-error", f"expected '=', '~' or ';' after expression, found {self.tok!r}", self.tok.span)

    # expressions

    def expr(self) -> A.Expr:
        left = self.conjunction()
        while self.at("OR"):
            op = self.next()
            left = A.Call("logical_or", (left, self.conjunction()), span=op.span)
        return left

    def conjunction(self) -> A.Expr:
        left = self.equality()
        while self.at("AND"):
            op = self.next()
            left = A.Call("logical_and", (left, self.equality()), span=op.span)
        return left

    def equality(self) -> A.Expr:
        left = self.comparison()
        while self.tok.kind in _EQ_OPS:
            op = self.next()
            left = A.Call(A.BINARY_OPS[_EQ_OPS[op.kind]], (left, self.comparison()), span=op.span)
        return left

    def comparison(self) -> A.Expr:
        left = self.additive()
        while self.tok.kind in _CMP_OPS:
            op = self.next()
            left = A.Call(A.BINARY_OPS[_CMP_OPS[op.kind]], (left, self.additive()), span=op.span)
        return left

    def additive(self) -> A.Expr:
        left = self.multiplicative()
        while self.tok.kind in _ADD_OPS:
            op = self.next()
            left = A.Call(A.BINARY_OPS[_ADD_OPS[op.kind]], (left, self.multiplicative()), span=op.span)
        return left

    def multiplicative(self) -> A.Expr:
        left = self.unary()
        while self.tok.kind in _MUL_OPS:
            op = self.next()
            left = A.Call(A.BINARY_OPS[_MUL_OPS[op.kind]], (left, self.unary()), span=op.span)
        return left

    def unary(self) -> A.Expr:
        if self.at("MINUS", "BANG", "PLUS"):
            op = self.next()
            sym = {"MINUS": "-", "BANG": "!", "PLUS": "+"}[op.kind]
            return A.Call(A.UNARY_OPS[sym], (self.unary(),), span=op.span)
        return self.power()

    def power(self) -> A.Expr:
        base = self.postfix()
        if self.at("HAT"):
            op = self.next()
            return A.Call("pow", (base, self.unary()), span=op.span)
        return base

    def postfix(self) -> A.Expr:
        e = self.primary()
        while True:
            if self.at("LBRACK"):
                span = self.next().span
                indices = [self.expr()]
                while self.accept("COMMA"):
                    indices.append(self.expr())
                self.expect("RBRACK", "']'")
                e = A.Index(e, tuple(indices), span=span)
            elif self.at("QUOTE"):
                span = self.next().span
                e = A.Call("transpose", (e,), span=span)
            else:
                return e

    def primary(self) -> A.Expr:
        t = self.tok
        span = t.span
        if t.kind == "INT":
            self.next()
            return A.Const(t.value, span=span)
        if t.kind == "FLOAT":
            self.next()
            return A.Const(t.value, span=span)
        if t.kind == "ID":
            self.next()
            if self.at("LPAREN"):
                self.next()
                args = self.arguments()
                if t.value.endswith(UNSUPPORTED_CALL_SUFFIXES) or t.value in UNSUPPORTED_CALLS:
                    raise error("unsupported-feature", f"'{t.value}' is not supported", span)
                return A.Call(t.value, tuple(args), span=span)
            return A.Var(t.value, span=span)
        if t.kind == "LPAREN":
            self.next()
            e = self.expr()
            self.expect("RPAREN", "')'")
            return e
        if t.kind == "LBRACE":
            self.next()
            items = self.expr_list("RBRACE")
            self.expect("RBRACE", "'}'")
            return A.ArrayLit(tuple(items), span=span)
        if t.kind == "LBRACK":
            self.next()
            items = self.expr_list("RBRACK")
            self.expect("RBRACK", "']'")
            if items and all(isinstance(i, A.VectorLit) for i in items):
                return A.MatrixLit(tuple(i.items for i in items), span=span)
            return A.VectorLit(tuple(items), span=span)
        if t.kind == "TARGET":
            raise error("unsupported-feature", "reading 'target' is not supported", span)
        found = "end of input" if t.kind == "EOF" else repr(t)
        raise error("syntax-error", f"expected an expression, found {found}", span)

    def expr_list(self, closer: str) -> list:
        items = []
        if self.at(closer):
            return items
        items.append(self.expr())
        while self.accept("COMMA"):
            items.append(self.expr())
        return items

    def arguments(self) -> list:
        args = []
        if not self.at("RPAREN"):
            args.append(self.expr())
            while self.accept("COMMA") or self.accept("BAR"):
                args.append(self.expr())
        self.expect("RPAREN", "')'")
        return args


def _lvalue(e: A.Expr, span: Span) -> tuple[str, tuple]:
    indices: list = []
    while isinstance(e, A.Index):
        indices[0:0] = list(e.indices)
        e = e.base
    if not isinstance(e, A.Var):
        raise error("syntax-error", "left side of an assignment must be a variable or an indexed variable", span)
    return e.name, tuple(indices)


# whole-program checks

_VISIBLE = {
    "data": ("data",),
    "transformed_data": ("data", "transformed_data"),
    "parameters": ("data", "transformed_data", "parameters"),
    "transformed_parameters": ("data", "transformed_data", "parameters", "transformed_parameters"),
    "model": ("data", "transformed_data", "parameters", "transformed_parameters", "model"),
    "guide_parameters": ("data", "transformed_data", "guide_parameters"),
    "guide": ("data", "transformed_data", "parameters", "guide_parameters", "guide"),
    "generated_quantities": (
        "data",
        "transformed_data",
        "parameters",
        "transformed_parameters",
        "generated_quantities",
    ),
}


def check_program(program: A.Program) -> None:
    diags: list[Diagnostic] = []
    seen: dict[str, A.Decl] = {}
    for net in program.networks:
        if net.name in seen:
            diags.append(Diagnostic("duplicate-name", f"'{net.name}' is declared more than once", net.span))
        seen[net.name] = net
    for _, decl in program.all_decls():
        if decl.name in seen:
            diags.append(Diagnostic("duplicate-name", f"'{decl.name}' is declared more than once", decl.span))
        seen[decl.name] = decl
    networks = {n.name for n in program.networks}
    for _, decl in program.all_decls():
        if A.is_network_path(decl.name) and decl.name.split(".")[0] not in networks:
            diags.append(
                Diagnostic(
                    "invalid-network-parameter",
                    f"'{decl.name}' does not name a parameter of a declared network",
                    decl.span,
                )
            )
    functions = {f.name for f in program.functions}
    for block_name, visible in _VISIBLE.items():
        block = program.block(block_name)
        if block is None:
            continue
        scope = set(networks) | functions
        for b in visible:
            scope |= {d.name for d in program.decls(b)}
        assignable = {d.name for d in block.decls}
        checker = _ScopeChecker(scope, assignable, diags)
        for decl in block.decls:
            checker.decl(decl)
        checker.stmt(block.body)
    for fun in program.functions:
        params = {p for _, p in fun.params}
        locals_ = {d.name for d in fun.local_decls}
        checker = _ScopeChecker(params | locals_ | functions | networks, params | locals_, diags, in_function=True)
        checker.stmt(fun.body)
    if diags:
        raise CompileError(diags)


class _ScopeChecker:
    def __init__(self, scope, assignable, diags, in_function=False):
        self.scope = set(scope)
        self.assignable = set(assignable)
        self.diags = diags
        self.in_function = in_function

    def decl(self, decl: A.Decl) -> None:
        for part in (decl.constraint.lower, decl.constraint.upper, *decl.base.sizes):
            if part is not None and not isinstance(part, A.Wild):
                self.expr(part)
        if isinstance(decl.dims, tuple):
            for s in decl.dims:
                if not isinstance(s, A.Wild):
                    self.expr(s)

    def expr(self, e) -> None:
        for node in A.walk(e):
            if isinstance(node, A.Var) and node.name not in self.scope:
                self.diags.append(Diagnostic("undeclared-name", f"'{node.name}' is not declared", node.span))

    def stmt(self, s) -> None:
        if isinstance(s, A.Seq):
            for x in s.stmts:
                self.stmt(x)
        elif isinstance(s, A.Assign):
            if s.name not in self.scope:
                self.diags.append(Diagnostic("undeclared-name", f"'{s.name}' is not declared", s.span))
            elif s.name not in self.assignable:
                self.diags.append(
                    Diagnostic("readonly-assignment", f"'{s.name}' cannot be assigned in this block", s.span)
                )
            for i in s.indices:
                self.expr(i)
            self.expr(s.value)
        elif isinstance(s, (A.ForRange, A.ForEach)):
            if isinstance(s, A.ForRange):
                self.expr(s.lo)
                self.expr(s.hi)
            else:
                self.expr(s.iterable)
            added = s.var not in self.scope
            self.scope.add(s.var)
            self.stmt(s.body)
            if added:
                self.scope.discard(s.var)
        elif isinstance(s, A.While):
            self.expr(s.cond)
            self.stmt(s.body)
        elif isinstance(s, A.If):
            self.expr(s.cond)
            self.stmt(s.then)
            self.stmt(s.orelse)
        elif isinstance(s, A.TargetPlusEq):
            self.expr(s.expr)
        elif isinstance(s, A.Tilde):
            self.expr(s.lhs)
            for a in s.args:
                self.expr(a)
        elif isinstance(s, A.Return):
            if not self.in_function:
                self.diags.append(Diagnostic("syntax-error", "'return' outside of a function", s.span))
            elif s.value is not None:
                self.expr(s.value)
        elif isinstance(s, A.CallStmt):
            for a in s.args:
                self.expr(a)
