"""Deterministic builtin functions, dispatched on runtime values."""

from __future__ import annotations

import math

from . import distributions
from .values import (
    Dist,
    Matrix,
    RowVector,
    StanRuntimeError,
    VType,
    Vector,
    allocate,
    broadcast,
    dims_of,
    flatten,
)


def _num(x):
    if isinstance(x, tuple):
        raise StanRuntimeError("type-mismatch", "expected a scalar")
    return x


def emap(f, v):
    if isinstance(v, tuple):
        return type(v)(emap(f, x) for x in v)
    return f(v)


def ezip(f, a, b):
    if isinstance(a, tuple) and isinstance(b, tuple):
        if len(a) != len(b):
            raise StanRuntimeError("size-mismatch", f"operands have sizes {len(a)} and {len(b)}")
        return type(a)(ezip(f, x, y) for x, y in zip(a, b))
    if isinstance(a, tuple):
        return type(a)(ezip(f, x, b) for x in a)
    if isinstance(b, tuple):
        return type(b)(ezip(f, a, y) for y in b)
    return f(a, b)


def _fdiv(a, b):
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def _divide(a, b):
    if isinstance(a, int) and isinstance(b, int):
        if b == 0:
            raise StanRuntimeError("domain-error", "integer division by zero")
        q = abs(a) // abs(b)
        return q if (a >= 0) == (b >= 0) else -q
    return _fdiv(float(a), b)


def _modulus(a, b):
    if b == 0:
        raise StanRuntimeError("domain-error", "modulus by zero")
    return int(math.fmod(a, b))


def _dot(a, b):
    if len(a) != len(b):
        raise StanRuntimeError("size-mismatch", f"operands have sizes {len(a)} and {len(b)}")
    total = 0.0
    for x, y in zip(a, b):
        total += x * y
    return total


def _cols(m: Matrix) -> list:
    return [tuple(r[j] for r in m) for j in range(len(m[0]))] if m else []


def multiply(a, b):
    ta, tb = type(a), type(b)
    if not isinstance(a, tuple) or not isinstance(b, tuple):
        return ezip(lambda x, y: x * y, a, b)
    if ta is RowVector and tb is Vector:
        return _dot(a, b)
    if ta is Matrix and tb is Vector:
        return Vector(_dot(r, b) for r in a)
    if ta is Vector and tb is RowVector:
        return Matrix(RowVector(x * y for y in b) for x in a)
    if ta is RowVector and tb is Matrix:
        return RowVector(_dot(a, c) for c in _cols(b))
    if ta is Matrix and tb is Matrix:
        cols = _cols(b)
        return Matrix(RowVector(_dot(r, c) for c in cols) for r in a)
    raise StanRuntimeError("type-mismatch", f"cannot multiply {ta.__name__} by {tb.__name__}")


def _pow(a, b):
    try:
        return math.pow(a, b)
    except OverflowError:
        return math.inf
    except (ValueError, ZeroDivisionError):
        return math.inf if a == 0 else math.nan


def _safe(f):
    def g(x):
        try:
            return f(x)
        except OverflowError:
            return math.inf
        except (ValueError, ZeroDivisionError):
            if f is math.log and x == 0:
                return -math.inf
            return math.nan

    return g


def _vectorized(f):
    sf = _safe(f)
    return lambda v: emap(lambda x: sf(float(x)), v)


def _inv_logit(x):
    if x >= 0:
        return 1 / (1 + math.exp(-x))
    e = math.exp(x)
    return e / (1 + e)


def _phi(x):
    return 0.5 * math.erfc(-x / math.sqrt(2))


def _mean(v):
    xs = flatten(v)
    if not xs:
        raise StanRuntimeError("domain-error", "mean of an empty container")
    return sum(xs) / len(xs)


def _variance(v):
    xs = flatten(v)
    if len(xs) < 2:
        return 0.0 if xs else math.nan
    m = sum(xs) / len(xs)
    return sum((x - m) ** 2 for x in xs) / (len(xs) - 1)


def _log_sum_exp(*args):
    xs = flatten(args[0]) if len(args) == 1 else [_num(a) for a in args]
    if not xs:
        return -math.inf
    m = max(xs)
    if math.isinf(m):
        return m
    return m + math.log(sum(math.exp(x - m) for x in xs))


def _maxmin(pick):
    def f(*args):
        xs = flatten(args[0]) if len(args) == 1 else list(args)
        if not xs:
            raise StanRuntimeError("domain-error", "empty container")
        return pick(xs)

    return f


def _transpose(v):
    if type(v) is Vector:
        return RowVector(v)
    if type(v) is RowVector:
        return Vector(v)
    if type(v) is Matrix:
        return Matrix(RowVector(c) for c in _cols(v))
    raise StanRuntimeError("type-mismatch", "transpose expects a vector or matrix")


def _softmax(v):
    m = max(v)
    e = [math.exp(x - m) for x in v]
    s = sum(e)
    return Vector(x / s for x in e)


def _log_softmax(v):
    lse = _log_sum_exp(v)
    return Vector(x - lse for x in v)


def _cumsum(v):
    out, acc = [], 0
    for x in v:
        acc += x
        out.append(acc)
    return type(v)(out)


def _size(v):
    if not isinstance(v, tuple):
        raise StanRuntimeError("type-mismatch", "size expects a container")
    return len(v)


def _rows(v):
    return len(v)


def _cols_of(v):
    return len(v) if type(v) is RowVector else (len(v[0]) if v else 0)


def _rep_array(x, *dims):
    return broadcast(x, dims)


def _empty(kind, nsizes):
    def f(*args):
        sizes = tuple(int(a) for a in args[:nsizes])
        dims = tuple(int(d) for d in args[nsizes])
        return allocate(VType(kind, sizes, dims))

    return f


def _broadcast(x, dims):
    return broadcast(x, dims)


def _shape(v):
    return dims_of(v)


def _undefined():
    return None


BUILTINS = {
    "add": lambda a, b: ezip(lambda x, y: x + y, a, b),
    "subtract": lambda a, b: ezip(lambda x, y: x - y, a, b),
    "multiply": multiply,
    "divide": lambda a, b: ezip(_divide, a, b),
    "modulus": _modulus,
    "elt_multiply": lambda a, b: ezip(lambda x, y: x * y, a, b),
    "elt_divide": lambda a, b: ezip(lambda x, y: _fdiv(float(x), y), a, b),
    "pow": lambda a, b: ezip(_pow, a, b),
    "minus": lambda a: emap(lambda x: -x, a),
    "plus": lambda a: a,
    "logical_eq": lambda a, b: int(a == b),
    "logical_neq": lambda a, b: int(a != b),
    "logical_lt": lambda a, b: int(a < b),
    "logical_lte": lambda a, b: int(a <= b),
    "logical_gt": lambda a, b: int(a > b),
    "logical_gte": lambda a, b: int(a >= b),
    "logical_and": lambda a, b: int(a != 0 and b != 0),
    "logical_or": lambda a, b: int(a != 0 or b != 0),
    "logical_neg": lambda a: int(a == 0),
    "exp": _vectorized(math.exp),
    "log": _vectorized(math.log),
    "sqrt": _vectorized(math.sqrt),
    "square": _vectorized(lambda x: x * x),
    "inv": _vectorized(lambda x: 1 / x),
    "inv_logit": _vectorized(_inv_logit),
    "logit": _vectorized(lambda x: math.log(x / (1 - x))),
    "log1p": _vectorized(math.log1p),
    "log1m": _vectorized(lambda x: math.log1p(-x)),
    "expm1": _vectorized(math.expm1),
    "fabs": _vectorized(abs),
    "lgamma": _vectorized(math.lgamma),
    "tgamma": _vectorized(math.gamma),
    "tanh": _vectorized(math.tanh),
    "sin": _vectorized(math.sin),
    "cos": _vectorized(math.cos),
    "Phi": _vectorized(_phi),
    "floor": _vectorized(math.floor),
    "ceil": _vectorized(math.ceil),
    "round": _vectorized(lambda x: float(math.floor(x + 0.5)) if x >= 0 else -float(math.floor(-x + 0.5))),
    "abs": lambda a: abs(a),
    "fmin": lambda a, b: min(float(a), float(b)),
    "fmax": lambda a, b: max(float(a), float(b)),
    "step": lambda a: 0.0 if a < 0 else 1.0,
    "int_step": lambda a: int(a > 0),
    "sum": lambda v: sum(flatten(v)),
    "mean": _mean,
    "variance": _variance,
    "sd": lambda v: math.sqrt(_variance(v)),
    "log_sum_exp": _log_sum_exp,
    "max": _maxmin(max),
    "min": _maxmin(min),
    "dot_self": lambda v: _dot(v, v),
    "dot_product": _dot,
    "size": _size,
    "num_elements": lambda v: len(flatten(v)),
    "rows": _rows,
    "cols": _cols_of,
    "rep_vector": lambda x, n: Vector(float(x) for _ in range(n)),
    "rep_row_vector": lambda x, n: RowVector(float(x) for _ in range(n)),
    "rep_array": _rep_array,
    "rep_matrix": lambda x, m, n: Matrix(RowVector(float(x) for _ in range(n)) for _ in range(m)),
    "transpose": _transpose,
    "to_vector": lambda v: Vector(float(x) for x in flatten(v)),
    "to_row_vector": lambda v: RowVector(float(x) for x in flatten(v)),
    "to_array_1d": lambda v: tuple(float(x) for x in flatten(v)),
    "softmax": _softmax,
    "log_softmax": _log_softmax,
    "cumulative_sum": _cumsum,
    "pi": lambda: math.pi,
    "e": lambda: math.e,
    "positive_infinity": lambda: math.inf,
    "negative_infinity": lambda: -math.inf,
    "not_a_number": lambda: math.nan,
    # internal helpers emitted by the compiler
    "broadcast": _broadcast,
    "shape": _shape,
    "undefined": _undefined,
    "empty_int": _empty("int", 0),
    "empty_real": _empty("real", 0),
    "empty_vector": _empty("vector", 1),
    "empty_row_vector": _empty("row_vector", 1),
    "empty_matrix": _empty("matrix", 2),
}

_LPDF_SUFFIXES = ("_lpdf", "_lpmf", "_log")


def lpdf_base(name: str):
    for suffix in _LPDF_SUFFIXES:
        if name.endswith(suffix) and name[: -len(suffix)] in distributions.REGISTRY:
            return name[: -len(suffix)]
    return None


def resolve(name: str):
    """Return a callable for ``name`` taking evaluated arguments."""
    if name in BUILTINS:
        return BUILTINS[name]
    if name in distributions.REGISTRY:
        return lambda *args: Dist(name, tuple(args))
    base = lpdf_base(name)
    if base is not None:
        return lambda y, *args: distributions.log_density(Dist(base, tuple(args)), y)
    raise StanRuntimeError("unknown-builtin", f"unknown function '{name}'")


def call(name: str, args):
    try:
        return resolve(name)(*args)
    except TypeError as exc:
        raise StanRuntimeError("type-mismatch", f"{name}: {exc}") from None
