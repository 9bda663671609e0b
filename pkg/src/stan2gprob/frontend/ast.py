"""Abstract syntax of extended Stan programs.

Every node is a frozen dataclass so that structural equality can be used
directly in round-trip tests. Source spans are carried on nodes but excluded
from comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Optional, Union

from ..diagnostics import NO_SPAN, Span


def _span():
    return field(default=NO_SPAN, compare=False, repr=False, kw_only=True)


# Expressions


@dataclass(frozen=True)
class Const:
    value: Union[int, float]
    span: Span = _span()


@dataclass(frozen=True)
class Var:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class ArrayLit:
    items: tuple
    span: Span = _span()


@dataclass(frozen=True)
class VectorLit:
    items: tuple
    span: Span = _span()


@dataclass(frozen=True)
class MatrixLit:
    rows: tuple  # tuple of tuples of Expr
    span: Span = _span()


@dataclass(frozen=True)
class Index:
    base: "Expr"
    indices: tuple
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    span: Span = _span()


Expr = Union[Const, Var, ArrayLit, VectorLit, MatrixLit, Index, Call]

# Reserved builtin names that infix/prefix operators desugar to.
BINARY_OPS = {
    "||": "logical_or",
    "&&": "logical_and",
    "==": "logical_eq",
    "!=": "logical_neq",
    "<": "logical_lt",
    "<=": "logical_lte",
    ">": "logical_gt",
    ">=": "logical_gte",
    "+": "add",
    "-": "subtract",
    "*": "multiply",
    "/": "divide",
    "%": "modulus",
    ".*": "elt_multiply",
    "./": "elt_divide",
    "^": "pow",
}
UNARY_OPS = {"-": "minus", "!": "logical_neg", "+": "plus"}
OPERATOR_NAMES = {v: k for k, v in BINARY_OPS.items()}
UNARY_NAMES = {v: k for k, v in UNARY_OPS.items()}


# Statements


@dataclass(frozen=True)
class Assign:
    name: str
    indices: tuple  # empty for a plain variable
    value: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Seq:
    stmts: tuple
    span: Span = _span()


@dataclass(frozen=True)
class ForRange:
    var: str
    lo: Expr
    hi: Expr
    body: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class ForEach:
    var: str
    iterable: Expr
    body: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class While:
    cond: Expr
    body: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    orelse: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class Skip:
    span: Span = _span()


@dataclass(frozen=True)
class TargetPlusEq:
    expr: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Tilde:
    lhs: Expr
    dist: str
    args: tuple
    span: Span = _span()


@dataclass(frozen=True)
class Return:
    """Only legal inside user function bodies; removed by inlining."""

    value: Optional[Expr]
    span: Span = _span()


@dataclass(frozen=True)
class CallStmt:
    """Call of a user-defined void function; removed by inlining."""

    name: str
    args: tuple
    span: Span = _span()


Stmt = Union[Assign, Seq, ForRange, ForEach, While, If, Skip, TargetPlusEq, Tilde, Return, CallStmt]


# Declarations


@dataclass(frozen=True)
class Wild:
    """The ``_`` size wildcard."""

    span: Span = _span()


@dataclass(frozen=True)
class Star:
    """The ``*`` dimension wildcard."""

    span: Span = _span()


@dataclass(frozen=True)
class BaseType:
    kind: str  # int | real | vector | row_vector | matrix
    sizes: tuple = ()  # Expr or Wild entries


@dataclass(frozen=True)
class Constraint:
    lower: Optional[Expr] = None
    upper: Optional[Expr] = None

    @property
    def is_empty(self) -> bool:
        return self.lower is None and self.upper is None


NO_CONSTRAINT = Constraint()


@dataclass(frozen=True)
class Decl:
    base: BaseType
    name: str
    constraint: Constraint = NO_CONSTRAINT
    dims: Union[tuple, Star, None] = None  # None: not an array
    span: Span = _span()


@dataclass(frozen=True)
class NetworkDecl:
    cls: str
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class FunType:
    kind: str  # void | int | real | vector | row_vector | matrix
    ndims: int = 0


@dataclass(frozen=True)
class FunDecl:
    return_type: FunType
    name: str
    params: tuple  # of (FunType, name)
    body: Seq
    local_decls: tuple = ()
    span: Span = _span()


@dataclass(frozen=True)
class Block:
    decls: tuple = ()
    body: Seq = Seq(())


BLOCK_ORDER = (
    "functions",
    "networks",
    "data",
    "transformed_data",
    "parameters",
    "transformed_parameters",
    "model",
    "guide_parameters",
    "guide",
    "generated_quantities",
)

BLOCK_TITLES = {
    "functions": "functions",
    "networks": "networks",
    "data": "data",
    "transformed_data": "transformed data",
    "parameters": "parameters",
    "transformed_parameters": "transformed parameters",
    "model": "model",
    "guide_parameters": "guide parameters",
    "guide": "guide",
    "generated_quantities": "generated quantities",
}


@dataclass(frozen=True)
class Program:
    model: Block
    functions: tuple = ()
    networks: tuple = ()
    data: Optional[Block] = None
    transformed_data: Optional[Block] = None
    parameters: Optional[Block] = None
    transformed_parameters: Optional[Block] = None
    guide_parameters: Optional[Block] = None
    guide: Optional[Block] = None
    generated_quantities: Optional[Block] = None

    def block(self, name: str) -> Optional[Block]:
        return getattr(self, name)

    def decls(self, name: str) -> tuple:
        block = self.block(name)
        return block.decls if block is not None else ()

    def all_decls(self) -> Iterator[tuple[str, Decl]]:
        for name in BLOCK_ORDER:
            if name in ("functions", "networks"):
                continue
            for decl in self.decls(name):
                yield name, decl

    @property
    def param_decls(self) -> tuple:
        return self.decls("parameters")

    def with_blocks(self, **blocks) -> "Program":
        return replace(self, **blocks)


def seq(*stmts) -> Seq:
    """Build a flat sequence, splicing nested sequences and dropping skips."""
    out = []
    for s in stmts:
        if isinstance(s, Seq):
            out.extend(s.stmts)
        elif isinstance(s, Skip):
            continue
        else:
            out.append(s)
    return Seq(tuple(out))


def children(node) -> Iterator:
    """Direct AST children of an expression or statement."""
    for f in fields(node):
        if f.name == "span":
            continue
        value = getattr(node, f.name)
        if isinstance(value, tuple):
            for item in value:
                if isinstance(item, tuple):
                    yield from (x for x in item if _is_node(x))
                elif _is_node(item):
                    yield item
        elif _is_node(value):
            yield value


def _is_node(x) -> bool:
    return hasattr(x, "__dataclass_fields__") and not isinstance(x, (BaseType, Constraint, FunType))


def walk(node) -> Iterator:
    yield node
    for child in children(node):
        yield from walk(child)


def free_vars(expr) -> set[str]:
    return {n.name for n in walk(expr) if isinstance(n, Var)}


def calls(node) -> Iterator[Call]:
    return (n for n in walk(node) if isinstance(n, Call))


def is_network_path(name: str) -> bool:
    return "." in name
