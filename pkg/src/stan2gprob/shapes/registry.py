"""Builtin function and distribution schemas, loaded from ``signatures.txt``."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from ..frontend import ast as A
from .types import INT, REAL, ArrayDimT, ArrayT, IntT, MatrixT, RowVectorT, VectorT, nest
from .unify import Unifier

CONTAINERS = ("scalar", "dims", "array", "vector", "row_vector")


@dataclass(frozen=True)
class Param:
    """One argument position of a schema.

    ``type`` is a template whose sizes are names (quantified per use) or
    integer constants; ``lift`` is the vectorization flag; ``bind`` names a
    size variable that is set to the argument's value.
    """

    type: object
    lift: bool = False
    bind: str | None = None


@dataclass(frozen=True)
class Schema:
    kind: str  # fn | dist
    name: str
    params: tuple
    result: object
    container: str = "scalar"

    def signature(self) -> str:
        from .types import type_str

        args = ", ".join(type_str(p.type) + ("^" if p.lift else "") for p in self.params)
        return f"{self.name}({args}) : {type_str(self.result)}"


# template parsing

_TYPE_RE = re.compile(
    r"^(int|real|vector|row_vector|matrix)(\[[^\]]*\])?(\[[^\]]*\])?(@\w+)?(\^)?$"
)


def _size(tok: str):
    tok = tok.strip()
    return A.Const(int(tok)) if tok.isdigit() else tok


def _parse_type(text: str):
    m = _TYPE_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad signature type: {text!r}")
    kind, first, second, bind, lift = m.groups()
    groups = [g[1:-1] for g in (first, second) if g]
    if kind in ("vector", "row_vector"):
        base = (VectorT if kind == "vector" else RowVectorT)(_size(groups.pop(0)))
    elif kind == "matrix":
        r, c = groups.pop(0).split(",")
        base = MatrixT(_size(r), _size(c))
    else:
        base = INT if kind == "int" else REAL
    if groups:
        dims = groups.pop(0)
        if dims.startswith("*"):
            base = ArrayDimT(base, dims[1:])
        else:
            base = nest(base, [_size(s) for s in dims.split(",")])
    return base, bool(lift), (bind[1:] if bind else None)


def _container(t, container: str, tag: str):
    if container == "scalar":
        return t
    if container == "dims":
        return ArrayDimT(t, "_d" + tag)
    size = "_s" + tag
    if container == "array" or isinstance(t, IntT):
        return ArrayT(t, size)
    return VectorT(size) if container == "vector" else RowVectorT(size)


def _split_args(text: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    if cur.strip():
        out.append(cur)
    return out


_LINE_RE = re.compile(r"^(fn|dist)\s+(\w+)\((.*)\)\s*:\s*(.+)$")


def parse_signatures(text: str) -> list[Schema]:
    schemas: list[Schema] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if not m:
            raise ValueError(f"bad signature line: {raw!r}")
        kind, name, args, result = m.groups()
        params = [_parse_type(a) for a in _split_args(args)]
        res_type, res_lift, _ = _parse_type(result)
        if not res_lift and not any(lift for _, lift, _ in params):
            schemas.append(Schema(kind, name, tuple(Param(t, False, b) for t, _, b in params), res_type))
            continue
        seen = set()
        for container in CONTAINERS:
            ps = tuple(
                Param(_container(t, container, "") if lift else t, lift, b) for t, lift, b in params
            )
            res = _container(res_type, container, "") if res_lift else res_type
            key = (ps, res)
            if key in seen:
                continue
            seen.add(key)
            schemas.append(Schema(kind, name, ps, res, container))
    return schemas


class Registry:
    def __init__(self, schemas: list[Schema]):
        self.functions: dict[str, list[Schema]] = {}
        self.distributions: dict[str, list[Schema]] = {}
        for s in schemas:
            table = self.functions if s.kind == "fn" else self.distributions
            table.setdefault(s.name, []).append(s)

    def is_distribution(self, name: str) -> bool:
        return name in self.distributions

    def lpdf_base(self, name: str) -> str | None:
        for suffix in ("_lpdf", "_lpmf", "_log"):
            if name.endswith(suffix) and name[: -len(suffix)] in self.distributions:
                return name[: -len(suffix)]
        return None

    def candidates(self, name: str) -> list[Schema]:
        """Schemas for a call ``name(...)`` in expression position."""
        if name in self.functions:
            return self.functions[name]
        base = self.lpdf_base(name)
        if base is not None:
            return [
                Schema("fn", name, (Param(s.result, True),) + s.params, REAL, s.container)
                for s in self.distributions[base]
            ]
        return self.distributions.get(name, [])

    def known(self, name: str) -> bool:
        return name in self.functions or name in self.distributions or self.lpdf_base(name) is not None


@lru_cache(maxsize=1)
def default_registry() -> Registry:
    text = resources.files("stan2gprob.shapes").joinpath("signatures.txt").read_text()
    return Registry(parse_signatures(text))


def instantiate(schema: Schema, u: Unifier):
    """Fresh copies of a schema's parameter and result types, plus the size map."""
    names: dict = {}

    def size(s):
        if isinstance(s, str):
            if s not in names:
                names[s] = u.fresh_size()
            return names[s]
        return s

    def dim(d):
        if isinstance(d, str):
            if d not in names:
                names[d] = u.fresh_dim()
            return names[d]
        return d

    def go(t):
        if isinstance(t, VectorT):
            return VectorT(size(t.size))
        if isinstance(t, RowVectorT):
            return RowVectorT(size(t.size))
        if isinstance(t, MatrixT):
            return MatrixT(size(t.rows), size(t.cols))
        if isinstance(t, ArrayT):
            return ArrayT(go(t.elem), size(t.size))
        if isinstance(t, ArrayDimT):
            return ArrayDimT(go(t.elem), dim(t.dim))
        return t

    params = tuple(Param(go(p.type), p.lift, p.bind) for p in schema.params)
    return params, go(schema.result), names
