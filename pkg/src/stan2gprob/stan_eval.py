"""Reference interpreter for Stan's deterministic semantics.

Given data and fixed parameter values, a kernel program is executed
statement by statement and the accumulated ``target`` is returned together
with the rest of the environment.
"""

from __future__ import annotations

from .frontend import ast as A
from .normalize import Phase, allocation_schedule, is_kernel, kernelize
from .runtime import builtins
from .runtime.distributions import log_density
from .runtime.values import (
    Dist,
    Matrix,
    RowVector,
    StanRuntimeError,
    VType,
    Vector,
    allocate,
    flatten,
    from_json,
    index,
    index_all,
    set_index,
)

WHILE_LIMIT = 10**6


def eval_expr(env: dict, e):
    if isinstance(e, A.Const):
        return e.value
    if isinstance(e, A.Var):
        try:
            return env[e.name]
        except KeyError:
            raise StanRuntimeError("unbound-variable", f"'{e.name}' has no value") from None
    if isinstance(e, A.Call):
        args = [eval_expr(env, a) for a in e.args]
        return builtins.call(e.name, args)
    if isinstance(e, A.Index):
        v = eval_expr(env, e.base)
        for i in e.indices:
            v = index(v, eval_expr(env, i))
        return v
    if isinstance(e, A.ArrayLit):
        items = [eval_expr(env, x) for x in e.items]
        if any(isinstance(x, float) for x in items):
            items = [float(x) if isinstance(x, int) else x for x in items]
        return tuple(items)
    if isinstance(e, A.VectorLit):
        return Vector(float(eval_expr(env, x)) for x in e.items)
    if isinstance(e, A.MatrixLit):
        return Matrix(RowVector(float(eval_expr(env, x)) for x in row) for row in e.rows)
    raise TypeError(f"not an expression: {e!r}")


def _truthy(v) -> bool:
    if isinstance(v, tuple):
        raise StanRuntimeError("type-mismatch", "condition must be a scalar")
    return v != 0


def _exec(env: dict, s) -> None:
    if isinstance(s, A.Seq):
        for x in s.stmts:
            _exec(env, x)
    elif isinstance(s, A.Assign):
        value = eval_expr(env, s.value)
        if s.indices:
            idx = [eval_expr(env, i) for i in s.indices]
            if env.get(s.name) is None:
                raise StanRuntimeError("unbound-variable", f"'{s.name}' is used before it has a value")
            env[s.name] = set_index(env[s.name], idx, coerce_like(index_all(env[s.name], idx), value))
        else:
            env[s.name] = coerce_like(env.get(s.name), value)
    elif isinstance(s, A.ForRange):
        lo, hi = eval_expr(env, s.lo), eval_expr(env, s.hi)
        if not isinstance(lo, int) or not isinstance(hi, int):
            raise StanRuntimeError("type-mismatch", "loop bounds must be integers")
        for i in range(lo, hi + 1):
            env[s.var] = i
            _exec(env, s.body)
    elif isinstance(s, A.ForEach):
        coll = eval_expr(env, s.iterable)
        if not isinstance(coll, tuple):
            raise StanRuntimeError("type-mismatch", "foreach expects a container")
        elems = [x for row in coll for x in row] if isinstance(coll, Matrix) else list(coll)
        for x in elems:
            env[s.var] = x
            _exec(env, s.body)
    elif isinstance(s, A.While):
        n = 0
        while _truthy(eval_expr(env, s.cond)):
            n += 1
            if n > WHILE_LIMIT:
                raise StanRuntimeError("loop-limit", f"while loop exceeded {WHILE_LIMIT} iterations")
            _exec(env, s.body)
    elif isinstance(s, A.If):
        _exec(env, s.then if _truthy(eval_expr(env, s.cond)) else s.orelse)
    elif isinstance(s, A.Skip):
        pass
    elif isinstance(s, A.TargetPlusEq):
        v = eval_expr(env, s.expr)
        env["target"] = env["target"] + (sum(flatten(v)) if isinstance(v, tuple) else v)
    elif isinstance(s, A.Tilde):
        d = Dist(s.dist, tuple(eval_expr(env, a) for a in s.args))
        env["target"] = env["target"] + log_density(d, eval_expr(env, s.lhs))
    else:
        raise StanRuntimeError("unsupported-feature", f"cannot execute {type(s).__name__}")


def coerce_like(old, new):
    """Assigning an int into a real location stores a real."""
    if isinstance(old, float) and isinstance(new, int):
        return float(new)
    if isinstance(old, tuple) and isinstance(new, tuple) and type(new) is tuple and type(old) is not tuple:
        return type(old)(new)
    return new


def eval_stmt(env: dict, s) -> dict:
    """Run one statement; returns the updated environment (input unchanged)."""
    out = dict(env)
    out.setdefault("target", 0.0)
    _exec(out, s)
    return out


# declarations and inputs


def decl_vtype(d: A.Decl, env: dict):
    """Concrete type of a declaration, or None when a size is a wildcard."""
    if isinstance(d.dims, A.Star):
        return None
    parts = list(d.base.sizes) + list(d.dims or ())
    if any(isinstance(p, A.Wild) for p in parts):
        return None
    sizes = tuple(_int(eval_expr(env, s), d.name) for s in d.base.sizes)
    dims = tuple(_int(eval_expr(env, s), d.name) for s in (d.dims or ()))
    return VType(d.base.kind, sizes, dims)


def _int(v, name):
    if not isinstance(v, int):
        raise StanRuntimeError("type-mismatch", f"size of '{name}' is not an integer")
    if v < 0:
        raise StanRuntimeError("domain-error", f"size of '{name}' is negative")
    return v


def allocate_decl(d: A.Decl, env: dict):
    vt = decl_vtype(d, env)
    return None if vt is None else allocate(vt)


def check_constraint(d: A.Decl, env: dict, value) -> None:
    c = d.constraint
    if c.is_empty or value is None:
        return
    lo = None if c.lower is None else eval_expr(env, c.lower)
    hi = None if c.upper is None else eval_expr(env, c.upper)
    for x in flatten(value):
        if (lo is not None and x < lo) or (hi is not None and x > hi):
            raise StanRuntimeError("constraint-violation", f"'{d.name}' = {x} violates its bounds")


def load_inputs(decls, raw: dict, env: dict | None = None, check: bool = True) -> dict:
    """Convert JSON-like inputs to runtime values following their declarations.

    Lists, plain tuples and numbers are converted; values that already are
    vectors or matrices are taken as given.
    """
    env = dict(env or {})
    out = {}
    for d in decls:
        if d.name not in raw:
            raise StanRuntimeError("missing-input", f"no value given for '{d.name}'")
        value = raw[d.name]
        if type(value) in (list, tuple, int, float):
            value = from_json(_to_list(value), decl_vtype(d, env), d.name)
        if check:
            check_constraint(d, env, value)
        env[d.name] = out[d.name] = value
    return out


def _to_list(v):
    return [_to_list(x) for x in v] if isinstance(v, tuple) else v


# programs


def run_block(decls, body: A.Seq, env: dict) -> dict:
    """Execute ``body`` allocating each local just before its first use."""
    env = dict(env)
    env.setdefault("target", 0.0)
    for group, stmt in allocation_schedule(decls, body.stmts):
        for d in group:
            env[d.name] = allocate_decl(d, env)
        if stmt is not None:
            _exec(env, stmt)
    return env


def run_model(program: A.Program, data: dict, params: dict, target: float = 0.0) -> dict:
    """Execute the kernel of ``program`` and return the final environment.

    ``data`` and ``params`` may hold runtime values or JSON-style lists,
    which are converted according to the declarations.
    """
    if not is_kernel(program):
        program = kernelize(program)
    env = load_inputs(program.decls("data"), data, check=False)
    env.update(load_inputs(program.param_decls, params, env, check=False))
    env["target"] = float(target)
    return run_block(program.model.decls, program.model.body, env)


def run_phase(phase: Phase, inputs: dict) -> dict:
    """Run a pre- or post-processing function; returns its named outputs."""
    env = run_block(phase.decls, phase.body, {n: inputs[n] for n in phase.inputs})
    return {n: env[n] for n in phase.outputs}
