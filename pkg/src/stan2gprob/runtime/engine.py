"""Weighted-trace execution of GProb programs.

A program is compiled once into nested Python closures; each run threads a
mutable environment and a small state record holding the RNG, the pinned
values and the accumulated log-weight. Loops update the environment in
place and hand back their state variables, which is observationally the
same as the functional reading since every name is bound once per scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..frontend import ast as A
from ..gprob.ir import (
    For,
    Factor,
    If,
    Let,
    Observe,
    Param,
    PIndex,
    PUnit,
    PVar,
    Return,
    Sample,
    TupleE,
    TypeDesc,
    Unit,
    While,
)
from ..stan_eval import WHILE_LIMIT, coerce_like, eval_expr
from . import builtins
from .distributions import draw, log_density
from .values import Dist, StanRuntimeError, VType, allocate, flatten, index, index_all, like, set_index


@dataclass
class Trace:
    values: dict  # site name -> value, in execution order
    log_weight: float
    return_value: object = None


@dataclass
class _State:
    rng: object = None
    pinned: dict | None = None
    include_prior: bool = False
    init: bool = False
    weight: float = 0.0
    values: dict = field(default_factory=dict)


# deterministic expressions


def _expr(e):
    if isinstance(e, A.Const):
        v = e.value
        return lambda env: v
    if isinstance(e, A.Var):
        name = e.name

        def var(env):
            try:
                return env[name]
            except KeyError:
                raise StanRuntimeError("unbound-variable", f"'{name}' has no value") from None

        return var
    if isinstance(e, A.Call):
        return _call(e)
    if isinstance(e, A.Index):
        base = _expr(e.base)
        idx = [_expr(i) for i in e.indices]
        if len(idx) == 1:
            i0 = idx[0]
            return lambda env: index(base(env), i0(env))

        def multi(env):
            v = base(env)
            for i in idx:
                v = index(v, i(env))
            return v

        return multi
    return lambda env: eval_expr(env, e)


def _call(e: A.Call):
    name = e.name
    args = [_expr(a) for a in e.args]
    try:
        fn = builtins.resolve(name)
    except StanRuntimeError:
        return lambda env: builtins.call(name, [a(env) for a in args])

    def call(env):
        try:
            return fn(*[a(env) for a in args])
        except TypeError as exc:
            raise StanRuntimeError("type-mismatch", f"{name}: {exc}") from None

    return call


def _truthy(v) -> bool:
    if isinstance(v, tuple):
        raise StanRuntimeError("type-mismatch", "condition must be a scalar")
    return v != 0


# templates and initial values


def _vtype(vt: TypeDesc | None):
    """Closure evaluating a type descriptor to a zero-filled template value."""
    if vt is None:
        return None
    sizes = [_expr(s) for s in vt.sizes]
    dims = _expr(vt.dims) if isinstance(vt.dims, A.Call) else [_expr(d) for d in vt.dims]

    def template(env):
        ds = dims(env) if callable(dims) else tuple(d(env) for d in dims)
        return allocate(VType(vt.kind, tuple(int(s(env)) for s in sizes), tuple(int(d) for d in ds)))

    return template


def _init_scalar(lo, hi, rng) -> float:
    """Stan-style initial value: uniform(-2, 2) on the unconstrained scale."""
    u = float(rng.uniform(-2.0, 2.0))
    if math.isinf(lo) and math.isinf(hi):
        return u
    if math.isinf(hi):
        return lo + math.exp(u)
    if math.isinf(lo):
        return hi - math.exp(u)
    return lo + (hi - lo) / (1.0 + math.exp(-u))


def _init_draw(d: Dist, rng, template):
    if d.name != "improper_uniform":
        return draw(d, rng, template)
    lo, hi = d.params
    if template is None and not isinstance(lo, tuple) and not isinstance(hi, tuple):
        return _init_scalar(lo, hi, rng)
    if template is None:
        template = lo if isinstance(lo, tuple) else hi
    n = len(flatten(template))
    los = flatten(lo) if isinstance(lo, tuple) else [lo] * n
    his = flatten(hi) if isinstance(hi, tuple) else [hi] * n
    return like(template, [_init_scalar(a, b, rng) for a, b in zip(los, his)])


# programs


class _Builder:
    def __init__(self):
        self.anonymous = 0

    def site(self, name):
        if name is not None:
            return name
        self.anonymous += 1
        return f"sample__{self.anonymous}"

    def g(self, g, site=None):
        if isinstance(g, Let):
            return self.let(g)
        if isinstance(g, Return):
            return self.ret(g.value)
        if isinstance(g, If):
            cond, then, orelse = _expr(g.cond), self.g(g.then), self.g(g.orelse)
            return lambda env, st: then(env, st) if _truthy(cond(env)) else orelse(env, st)
        if isinstance(g, For):
            return self.for_(g)
        if isinstance(g, While):
            return self.while_(g)
        if isinstance(g, Factor):
            e = _expr(g.expr)

            def factor(env, st):
                v = e(env)
                st.weight += sum(flatten(v)) if isinstance(v, tuple) else v

            return factor
        if isinstance(g, Observe):
            d, v = _expr(g.dist), _expr(g.value)

            def observe(env, st):
                st.weight += log_density(d(env), v(env))

            return observe
        if isinstance(g, Sample):
            return self.sample(g, self.site(site))
        if isinstance(g, Param):
            return self.param(self.site(site))
        e = _expr(g)
        return lambda env, st: e(env)

    def let(self, g: Let):
        pat, body = g.pat, self.g(g.body)
        if isinstance(pat, PVar):
            x = pat.name
            value = self.g(g.value, x)

            def let_var(env, st):
                v = value(env, st)
                env[x] = coerce_like(env.get(x), v)
                return body(env, st)

            return let_var
        if isinstance(pat, PIndex):
            x = pat.name
            value = self.g(g.value)
            idx = [_expr(i) for i in pat.indices]

            def let_index(env, st):
                v = value(env, st)
                old = env.get(x)
                if old is None:
                    raise StanRuntimeError("unbound-variable", f"'{x}' is used before it has a value")
                ii = [i(env) for i in idx]
                env[x] = set_index(old, ii, coerce_like(index_all(old, ii), v))
                return body(env, st)

            return let_index
        value = self.g(g.value)
        if isinstance(pat, PUnit):

            def let_unit(env, st):
                value(env, st)
                return body(env, st)

            return let_unit
        names = pat.names

        def let_tuple(env, st):
            for n, v in zip(names, value(env, st)):
                env[n] = coerce_like(env.get(n), v)
            return body(env, st)

        return let_tuple

    def ret(self, v):
        if isinstance(v, Unit):
            return lambda env, st: None
        if isinstance(v, TupleE):
            items = [_expr(i) for i in v.items]
            return lambda env, st: [i(env) for i in items]
        e = _expr(v)
        return lambda env, st: e(env)

    def for_(self, g: For):
        lo, hi, body, var, state = _expr(g.lo), _expr(g.hi), self.g(g.body), g.var, g.state

        def loop(env, st):
            a, b = lo(env), hi(env)
            if not isinstance(a, int) or not isinstance(b, int):
                raise StanRuntimeError("type-mismatch", "loop bounds must be integers")
            for i in range(a, b + 1):
                env[var] = i
                r = body(env, st)
                if state:
                    for n, v in zip(state, r):
                        env[n] = v
            return [env[n] for n in state]

        return loop

    def while_(self, g: While):
        cond, body, state = _expr(g.cond), self.g(g.body), g.state

        def loop(env, st):
            n = 0
            while _truthy(cond(env)):
                n += 1
                if n > WHILE_LIMIT:
                    raise StanRuntimeError("loop-limit", f"while loop exceeded {WHILE_LIMIT} iterations")
                r = body(env, st)
                if state:
                    for name, v in zip(state, r):
                        env[name] = v
            return [env[s] for s in state]

        return loop

    def sample(self, g: Sample, site: str):
        dist, template = _expr(g.dist), _vtype(g.vtype)

        def sample(env, st):
            d = dist(env)
            t = template(env) if template is not None else None
            pinned = st.pinned
            if pinned is not None and site in pinned:
                v = pinned[site]
            elif pinned is not None and not st.init:
                raise StanRuntimeError("missing-site", f"no pinned value for sample site '{site}'")
            elif st.init:
                v = _init_draw(d, st.rng, t)
            else:
                v = draw(d, st.rng, t)
            if st.include_prior:
                st.weight += log_density(d, v)
            st.values[site] = v
            return v

        return sample

    def param(self, site: str):
        def param(env, st):
            try:
                return env[site]
            except KeyError:
                raise StanRuntimeError("missing-input", f"no value given for guide parameter '{site}'") from None

        return param


class GProgram:
    """A compiled GProb expression, reusable across runs and threads."""

    def __init__(self, g):
        self.ir = g
        self._run = _Builder().g(g)

    def run(self, env: dict, rng=None, pinned=None, include_prior_lpdf: bool = False, init: bool = False) -> Trace:
        if isinstance(pinned, Trace):
            pinned = pinned.values
        st = _State(rng=rng, pinned=pinned, include_prior=include_prior_lpdf, init=init)
        if rng is None and (pinned is None or init):
            st.rng = np.random.default_rng()
        ret = self._run(dict(env), st)
        return Trace(st.values, st.weight, ret)


_COMPILED: dict = {}


def compile_gprob(g) -> GProgram:
    key = id(g)
    hit = _COMPILED.get(key)
    if hit is None or hit.ir is not g:
        hit = _COMPILED[key] = GProgram(g)
    return hit


def run_trace(g, env: dict, rng=None, pinned=None, include_prior_lpdf: bool = False) -> Trace:
    """Run ``g`` once: draw at sample sites (or read ``pinned``), sum factors."""
    return compile_gprob(g).run(env, rng=rng, pinned=pinned, include_prior_lpdf=include_prior_lpdf)
