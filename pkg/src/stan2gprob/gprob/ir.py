"""GProb intermediate representation.

Deterministic sub-expressions reuse the Stan expression nodes; the nodes
below add let-binding, loops carrying their updated variables, and the
probabilistic primitives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..frontend import ast as A

# patterns


@dataclass(frozen=True)
class PVar:
    name: str


@dataclass(frozen=True)
class PIndex:
    name: str
    indices: tuple


@dataclass(frozen=True)
class PUnit:
    pass


@dataclass(frozen=True)
class PTuple:
    names: tuple  # non-empty


Pattern = Union[PVar, PIndex, PUnit, PTuple]

# values returned by ``return``


@dataclass(frozen=True)
class Unit:
    pass


@dataclass(frozen=True)
class TupleE:
    items: tuple  # non-empty


@dataclass(frozen=True)
class TypeDesc:
    """Concrete shape attached to samples and learnable parameters.

    ``dims`` is a tuple of size expressions, or a single ``shape(e)`` call
    when the dims are those of a runtime value.
    """

    kind: str
    sizes: tuple = ()
    dims: Union[tuple, A.Call] = ()


# expressions


@dataclass(frozen=True)
class Let:
    pat: Pattern
    value: "GExpr"
    body: "GExpr"


@dataclass(frozen=True)
class If:
    cond: A.Expr
    then: "GExpr"
    orelse: "GExpr"


@dataclass(frozen=True)
class For:
    state: tuple
    var: str
    lo: A.Expr
    hi: A.Expr
    body: "GExpr"


@dataclass(frozen=True)
class While:
    state: tuple
    cond: A.Expr
    body: "GExpr"


@dataclass(frozen=True)
class Factor:
    expr: A.Expr


@dataclass(frozen=True)
class Sample:
    dist: A.Call
    vtype: Optional[TypeDesc] = None


@dataclass(frozen=True)
class Observe:
    dist: A.Call
    value: A.Expr


@dataclass(frozen=True)
class Return:
    value: Union[A.Expr, Unit, TupleE]


@dataclass(frozen=True)
class Param:
    """A learnable guide parameter of the given shape."""

    vtype: TypeDesc


GExpr = Union[Let, If, For, While, Factor, Sample, Observe, Return, Param, A.Expr]

GPROB_NODES = (Let, If, For, While, Factor, Sample, Observe, Return, Param)


def gwalk(g):
    """All IR nodes of ``g`` (deterministic expressions are not entered)."""
    yield g
    if isinstance(g, Let):
        yield from gwalk(g.value)
        yield from gwalk(g.body)
    elif isinstance(g, If):
        yield from gwalk(g.then)
        yield from gwalk(g.orelse)
    elif isinstance(g, (For, While)):
        yield from gwalk(g.body)


def observe_to_factor(g):
    """Rewrite every ``observe(D, v)`` into ``factor(D_lpdf(v | ...))``."""
    if isinstance(g, Observe):
        return Factor(A.Call(g.dist.name + "_lpdf", (g.value,) + g.dist.args))
    if isinstance(g, Let):
        return Let(g.pat, observe_to_factor(g.value), observe_to_factor(g.body))
    if isinstance(g, If):
        return If(g.cond, observe_to_factor(g.then), observe_to_factor(g.orelse))
    if isinstance(g, For):
        return For(g.state, g.var, g.lo, g.hi, observe_to_factor(g.body))
    if isinstance(g, While):
        return While(g.state, g.cond, observe_to_factor(g.body))
    return g
