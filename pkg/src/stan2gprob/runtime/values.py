"""Runtime values shared by the Stan and GProb interpreters.

Scalars are Python ``int``/``float``; arrays are (nested) tuples; vectors,
row vectors and matrices are tuple subclasses so indexing and iteration
come for free while the container kind stays visible. Values are
immutable and updates are functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class Vector(tuple):
    def __repr__(self) -> str:
        return f"Vector({list(self)!r})"


class RowVector(tuple):
    def __repr__(self) -> str:
        return f"RowVector({list(self)!r})"


class Matrix(tuple):
    """A tuple of equally long ``RowVector`` rows."""

    def __repr__(self) -> str:
        return f"Matrix({[list(r) for r in self]!r})"


@dataclass(frozen=True)
class Dist:
    name: str
    params: tuple


class StanRuntimeError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message
        super().__init__(f"{code}: {message}")


def is_container(v) -> bool:
    return isinstance(v, tuple)


def is_array(v) -> bool:
    return type(v) is tuple


def flatten(v) -> list:
    if not isinstance(v, tuple):
        return [v]
    out = []
    for x in v:
        out.extend(flatten(x)) if isinstance(x, tuple) else out.append(x)
    return out


def like(template, flat):
    """Rebuild ``flat`` (an iterator or list) into the structure of ``template``."""
    it = iter(flat)

    def go(t):
        if isinstance(t, tuple):
            return type(t)(go(x) for x in t)
        return next(it)

    return go(template)


def dims_of(v) -> tuple:
    """Full dimension list: array levels, then vector/matrix sizes."""
    out = []
    while isinstance(v, tuple):
        out.append(len(v))
        if not v:
            break
        v = v[0]
    return tuple(out)


# indexing


def _position(i, n: int) -> int:
    if isinstance(i, bool) or not isinstance(i, int):
        raise StanRuntimeError("type-mismatch", f"index {i!r} is not an integer")
    if i < 1 or i > n:
        raise StanRuntimeError("index-out-of-bounds", f"index {i} out of range 1..{n}")
    return i - 1


def index(v, i):
    if not isinstance(v, tuple):
        raise StanRuntimeError("type-mismatch", "cannot index a scalar")
    if isinstance(i, tuple):  # multi-indexing
        picked = [v[_position(j, len(v))] for j in i]
        return type(v)(picked)
    return v[_position(i, len(v))]


def index_all(v, indices):
    for i in indices:
        v = index(v, i)
    return v


def set_index(v, indices, new):
    """Functional update ``v[indices] = new``."""
    if not indices:
        return new
    if not isinstance(v, tuple):
        raise StanRuntimeError("type-mismatch", "cannot index a scalar")
    i = indices[0]
    if isinstance(i, tuple):
        raise StanRuntimeError("unsupported-feature", "multi-index assignment is not supported")
    p = _position(i, len(v))
    items = list(v)
    items[p] = set_index(v[p], indices[1:], new)
    return type(v)(items)


# runtime type descriptors


@dataclass(frozen=True)
class VType:
    """A concrete value type: base kind, vector/matrix sizes and array dims."""

    kind: str  # int | real | vector | row_vector | matrix
    sizes: tuple = ()
    dims: tuple = ()

    def count(self) -> int:
        n = 1
        for d in self.dims + self.sizes:
            n *= d
        return n


def build(vt: VType, flat) -> object:
    """Construct a value of type ``vt`` from a flat iterable of scalars."""
    it = iter(flat)

    def base():
        if vt.kind == "int":
            return int(next(it))
        if vt.kind == "real":
            return float(next(it))
        if vt.kind == "vector":
            return Vector(float(next(it)) for _ in range(vt.sizes[0]))
        if vt.kind == "row_vector":
            return RowVector(float(next(it)) for _ in range(vt.sizes[0]))
        rows, cols = vt.sizes
        return Matrix(RowVector(float(next(it)) for _ in range(cols)) for _ in range(rows))

    def go(dims):
        if not dims:
            return base()
        return tuple(go(dims[1:]) for _ in range(dims[0]))

    return go(vt.dims)


def allocate(vt: VType):
    fill = 0 if vt.kind == "int" else math.nan
    return build(vt, (fill for _ in range(vt.count())))


def broadcast(v, dims):
    """Replicate ``v`` into nested arrays of the given dims."""
    for d in reversed(tuple(dims)):
        v = tuple(v for _ in range(int(d)))
    return v


# JSON conversion


def from_json(raw, vt: VType | None, name: str = "value"):
    """Convert JSON data to a runtime value, checking it against ``vt``.

    Without a type, lists become nested arrays of reals.
    """
    if vt is None:
        if isinstance(raw, list):
            return tuple(from_json(x, None, name) for x in raw)
        return float(raw)

    def scalar(x, kind):
        if isinstance(x, (list, dict)) or x is None:
            raise StanRuntimeError("shape-mismatch", f"'{name}': expected a number, got {x!r}")
        if kind == "int":
            if isinstance(x, bool) or (isinstance(x, float) and not x.is_integer()):
                raise StanRuntimeError("type-mismatch", f"'{name}': expected an integer, got {x!r}")
            return int(x)
        return float(x)

    def seq(x, n, what):
        if not isinstance(x, list) or len(x) != n:
            got = len(x) if isinstance(x, list) else "a scalar"
            raise StanRuntimeError("shape-mismatch", f"'{name}': expected {what} of size {n}, got {got}")
        return x

    def base(x):
        if vt.kind in ("int", "real"):
            return scalar(x, vt.kind)
        if vt.kind == "vector":
            return Vector(scalar(e, "real") for e in seq(x, vt.sizes[0], "vector"))
        if vt.kind == "row_vector":
            return RowVector(scalar(e, "real") for e in seq(x, vt.sizes[0], "row_vector"))
        rows = seq(x, vt.sizes[0], "matrix")
        return Matrix(RowVector(scalar(e, "real") for e in seq(r, vt.sizes[1], "matrix row")) for r in rows)

    def go(x, dims):
        if not dims:
            return base(x)
        return tuple(go(e, dims[1:]) for e in seq(x, dims[0], "array"))

    return go(raw, vt.dims)


def to_json(v):
    if isinstance(v, tuple):
        return [to_json(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, Dist):
        return {"dist": v.name, "params": [to_json(p) for p in v.params]}
    return v
