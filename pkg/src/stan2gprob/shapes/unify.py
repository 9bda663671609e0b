"""Unification of internal types with size and shape variables."""

from __future__ import annotations

import copy
from dataclasses import dataclass

from ..diagnostics import NO_SPAN, error
from ..frontend import ast as A
from ..frontend.printer import expr_to_str
from .types import (
    ArrayDimT,
    ArrayT,
    DimVar,
    IntT,
    MatrixT,
    NetworkT,
    RealT,
    RowVectorT,
    ShapeList,
    ShapeOf,
    SizeVar,
    VectorT,
    nest,
    peel_arrays,
    size_str,
    type_str,
)

# Size expression normalization


def normalize_size(e):
    """Flatten +/* chains, fold integer literals and sort commutative operands."""
    if not isinstance(e, A.Call):
        return e
    args = tuple(normalize_size(a) for a in e.args)
    if e.name not in ("add", "multiply") or len(args) != 2:
        return A.Call(e.name, args)
    operands = []
    for a in args:
        if isinstance(a, A.Call) and a.name == e.name and len(a.args) != 1 and _is_flat(a):
            operands.extend(a.args)
        else:
            operands.append(a)
    literal = 0 if e.name == "add" else 1
    rest = []
    for o in operands:
        if isinstance(o, A.Const) and isinstance(o.value, int):
            literal = literal + o.value if e.name == "add" else literal * o.value
        else:
            rest.append(o)
    neutral = 0 if e.name == "add" else 1
    if literal != neutral or not rest:
        rest.append(A.Const(literal))
    if len(rest) == 1:
        return rest[0]
    rest.sort(key=expr_to_str)
    return _Flat(e.name, tuple(rest))


class _Flat(A.Call):
    """An n-ary add/multiply produced by normalization (comparison only)."""


def _is_flat(e) -> bool:
    return isinstance(e, _Flat)


@dataclass(frozen=True)
class Assertion:
    """A size equality that could not be decided statically."""

    left: object
    right: object

    def __str__(self) -> str:
        return f"{_any_str(self.left)} = {_any_str(self.right)}"


def _any_str(x) -> str:
    if isinstance(x, ShapeOf):
        return f"shape({expr_to_str(x.expr)})"
    if isinstance(x, ShapeList):
        return "[" + ",".join(size_str(s) for s in x.sizes) + "]"
    return size_str(x)


class Unifier:
    """Eager unifier holding the current substitution.

    ``fork`` and ``adopt`` implement trial unification for overload
    resolution: a candidate is checked on a copy and only the winning copy
    is adopted.
    """

    def __init__(self):
        self.sizes: dict = {}
        self.dims: dict = {}
        self.counter = 0
        self.assertions: list = []

    # variables

    def fresh_size(self) -> SizeVar:
        self.counter += 1
        return SizeVar(self.counter)

    def fresh_dim(self) -> DimVar:
        self.counter += 1
        return DimVar(self.counter)

    def fork(self) -> "Unifier":
        other = Unifier()
        other.sizes = dict(self.sizes)
        other.dims = dict(self.dims)
        other.counter = self.counter
        other.assertions = list(self.assertions)
        return other

    def adopt(self, other: "Unifier") -> None:
        self.sizes, self.dims = other.sizes, other.dims
        self.counter, self.assertions = other.counter, other.assertions

    def copy(self) -> "Unifier":
        return copy.deepcopy(self)

    # substitution

    def size(self, s):
        while isinstance(s, SizeVar) and s.id in self.sizes:
            s = self.sizes[s.id]
        return s

    def dim(self, d):
        while isinstance(d, DimVar) and d.id in self.dims:
            d = self.dims[d.id]
        if isinstance(d, ShapeList):
            return ShapeList(tuple(self.size(s) for s in d.sizes))
        return d

    def shallow(self, t):
        if isinstance(t, ArrayDimT):
            d = self.dim(t.dim)
            if isinstance(d, ShapeList):
                return nest(t.elem, d.sizes)
            return ArrayDimT(t.elem, d)
        return t

    def apply(self, t):
        t = self.shallow(t)
        if isinstance(t, VectorT):
            return VectorT(self.size(t.size))
        if isinstance(t, RowVectorT):
            return RowVectorT(self.size(t.size))
        if isinstance(t, MatrixT):
            return MatrixT(self.size(t.rows), self.size(t.cols))
        if isinstance(t, ArrayT):
            return ArrayT(self.apply(t.elem), self.size(t.size))
        if isinstance(t, ArrayDimT):
            return ArrayDimT(self.apply(t.elem), t.dim)
        return t

    # equations

    def unify(self, t1, t2, span=NO_SPAN, sub: bool = False) -> None:
        """Solve ``t1 ≡ t2``; with ``sub`` an int ``t2`` may stand for a real ``t1``."""
        a, b = self.shallow(t1), self.shallow(t2)
        if isinstance(a, RealT) and isinstance(b, (RealT, IntT)) and (sub or isinstance(b, RealT)):
            return
        if isinstance(a, IntT) and isinstance(b, IntT):
            return
        if isinstance(a, VectorT) and isinstance(b, VectorT):
            return self.unify_size(a.size, b.size, span)
        if isinstance(a, RowVectorT) and isinstance(b, RowVectorT):
            return self.unify_size(a.size, b.size, span)
        if isinstance(a, MatrixT) and isinstance(b, MatrixT):
            self.unify_size(a.rows, b.rows, span)
            return self.unify_size(a.cols, b.cols, span)
        if isinstance(a, ArrayT) and isinstance(b, ArrayT):
            self.unify(a.elem, b.elem, span, sub)
            return self.unify_size(a.size, b.size, span)
        if isinstance(a, ArrayDimT) and isinstance(b, ArrayDimT):
            self.unify(a.elem, b.elem, span, sub)
            return self.unify_dim(a.dim, b.dim, span)
        if isinstance(a, ArrayDimT) and isinstance(b, ArrayT):
            return self._dim_vs_nested(a, b, span, sub, flipped=False)
        if isinstance(a, ArrayT) and isinstance(b, ArrayDimT):
            return self._dim_vs_nested(b, a, span, sub, flipped=True)
        if isinstance(a, NetworkT) and isinstance(b, NetworkT) and a.cls == b.cls:
            return
        raise error(
            "type-mismatch",
            f"cannot unify {type_str(self.apply(t1))} with {type_str(self.apply(t2))}",
            span,
        )

    def _dim_vs_nested(self, ad: ArrayDimT, arr: ArrayT, span, sub, flipped):
        sizes, base = peel_arrays(arr)
        base = self.shallow(base)
        if isinstance(base, ArrayDimT):
            inner = self.dim(base.dim)
            outer = self.dim(ad.dim)
            if isinstance(outer, DimVar) and outer == inner:
                raise error(
                    "occurs-check",
                    f"shape variable {outer} would have to contain itself",
                    span,
                )
            raise error("ambiguous-shape", "cannot split a shape variable across array levels", span)
        if flipped:
            self.unify(base, ad.elem, span, sub)
        else:
            self.unify(ad.elem, base, span, sub)
        self.unify_dim(ad.dim, ShapeList(tuple(sizes)), span)

    def unify_dim(self, d1, d2, span=NO_SPAN) -> None:
        a, b = self.dim(d1), self.dim(d2)
        if a == b:
            return
        if isinstance(a, DimVar):
            self.dims[a.id] = b
            return
        if isinstance(b, DimVar):
            self.dims[b.id] = a
            return
        if isinstance(a, ShapeList) and isinstance(b, ShapeList):
            if len(a.sizes) != len(b.sizes):
                raise error(
                    "type-mismatch",
                    f"dimension mismatch: {_any_str(a)} has {len(a.sizes)} dimension(s), "
                    f"{_any_str(b)} has {len(b.sizes)}",
                    span,
                )
            for x, y in zip(a.sizes, b.sizes):
                self.unify_size(x, y, span)
            return
        self._assert(a, b)

    def unify_size(self, s1, s2, span=NO_SPAN) -> None:
        a, b = self.size(s1), self.size(s2)
        if a == b:
            return
        if isinstance(a, SizeVar):
            self.sizes[a.id] = b
            return
        if isinstance(b, SizeVar):
            self.sizes[b.id] = a
            return
        na, nb = normalize_size(a), normalize_size(b)
        if na == nb:
            return
        if _int_const(na) and _int_const(nb):
            raise error("size-mismatch", f"size {size_str(a)} does not match size {size_str(b)}", span)
        self._assert(a, b)

    def _assert(self, a, b) -> None:
        if not any({x.left, x.right} == {a, b} for x in self.assertions if _hashable(a, b)):
            self.assertions.append(Assertion(a, b))


def _int_const(e) -> bool:
    return isinstance(e, A.Const) and isinstance(e.value, int)


def _hashable(*xs) -> bool:
    try:
        for x in xs:
            hash(x)
    except TypeError:
        return False
    return True
