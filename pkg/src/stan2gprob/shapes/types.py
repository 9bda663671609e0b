"""Internal type language with size and shape variables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..frontend import ast as A
from ..frontend.printer import expr_to_str


@dataclass(frozen=True)
class SizeVar:
    id: int

    def __str__(self) -> str:
        return f"σ{self.id}"


Size = Union[SizeVar, "A.Expr"]


@dataclass(frozen=True)
class ShapeList:
    sizes: tuple


@dataclass(frozen=True)
class DimVar:
    id: int

    def __str__(self) -> str:
        return f"δ{self.id}"


@dataclass(frozen=True)
class ShapeOf:
    expr: "A.Expr"


Dim = Union[ShapeList, DimVar, ShapeOf]


@dataclass(frozen=True)
class IntT:
    pass


@dataclass(frozen=True)
class RealT:
    pass


@dataclass(frozen=True)
class VectorT:
    size: Size


@dataclass(frozen=True)
class RowVectorT:
    size: Size


@dataclass(frozen=True)
class MatrixT:
    rows: Size
    cols: Size


@dataclass(frozen=True)
class ArrayT:
    elem: "Type"
    size: Size


@dataclass(frozen=True)
class ArrayDimT:
    elem: "Type"
    dim: Dim


@dataclass(frozen=True)
class NetworkT:
    cls: str


Type = Union[IntT, RealT, VectorT, RowVectorT, MatrixT, ArrayT, ArrayDimT, NetworkT]

INT = IntT()
REAL = RealT()


def size_str(s) -> str:
    if isinstance(s, str):  # schema template name
        return s
    return str(s) if isinstance(s, SizeVar) else expr_to_str(s)


def peel_arrays(t) -> tuple[list, "Type"]:
    """Split nested arrays into their outer-to-inner sizes and element type."""
    sizes = []
    while isinstance(t, ArrayT):
        sizes.append(t.size)
        t = t.elem
    return sizes, t


def nest(elem, sizes) -> "Type":
    for s in reversed(list(sizes)):
        elem = ArrayT(elem, s)
    return elem


def type_str(t) -> str:
    if isinstance(t, IntT):
        return "int"
    if isinstance(t, RealT):
        return "real"
    if isinstance(t, VectorT):
        return f"vector[{size_str(t.size)}]"
    if isinstance(t, RowVectorT):
        return f"row_vector[{size_str(t.size)}]"
    if isinstance(t, MatrixT):
        return f"matrix[{size_str(t.rows)},{size_str(t.cols)}]"
    if isinstance(t, NetworkT):
        return f"network {t.cls}"
    if isinstance(t, ArrayT):
        sizes, elem = peel_arrays(t)
        suffix = "[" + ",".join(size_str(s) for s in sizes) + "]"
        if isinstance(elem, ArrayDimT):
            return type_str(elem.elem) + suffix + _dim_suffix(elem.dim)
        return type_str(elem) + suffix
    if isinstance(t, ArrayDimT):
        return type_str(t.elem) + _dim_suffix(t.dim)
    raise TypeError(t)


def _dim_suffix(d) -> str:
    if isinstance(d, str):
        return f"[*{d}]"
    if isinstance(d, DimVar):
        return f"[]^{d}"
    if isinstance(d, ShapeOf):
        return f"[shape({expr_to_str(d.expr)})]"
    return "[" + ",".join(size_str(s) for s in d.sizes) + "]"


def is_scalar(t) -> bool:
    return isinstance(t, (IntT, RealT))


def free_vars(t) -> tuple[set, set]:
    """Size and shape variables occurring in ``t``."""
    sizes: set = set()
    dims: set = set()

    def size(s):
        if isinstance(s, SizeVar):
            sizes.add(s)

    def go(t):
        if isinstance(t, (VectorT, RowVectorT)):
            size(t.size)
        elif isinstance(t, MatrixT):
            size(t.rows)
            size(t.cols)
        elif isinstance(t, ArrayT):
            size(t.size)
            go(t.elem)
        elif isinstance(t, ArrayDimT):
            go(t.elem)
            if isinstance(t.dim, DimVar):
                dims.add(t.dim)
            elif isinstance(t.dim, ShapeList):
                for s in t.dim.sizes:
                    size(s)

    go(t)
    return sizes, dims


def is_ground(t) -> bool:
    s, d = free_vars(t)
    return not s and not d
