"""Pyro-flavored source emission from GProb IR.

The output is validated structurally only. Conventions: observation sites
are named ``<base>__<k>`` with the enclosing loop indices appended,
``target += e`` observes ``-e`` under ``Exponential(1)``, explicit
broadcasts become ``zeros``/``ones``/``full`` and network parameters are
lifted with ``pyro.random_module`` from a dictionary of priors.
"""

from __future__ import annotations

import keyword
import math

from ..frontend import ast as A
from .ir import (
    For,
    Factor,
    If,
    Let,
    Observe,
    Param,
    PIndex,
    PTuple,
    PUnit,
    PVar,
    Return,
    Sample,
    TupleE,
    TypeDesc,
    Unit,
    While,
    gwalk,
)

HEADER = '''import math

import pyro
import pyro.distributions as dist
import torch
from torch import full, ones, randn, zeros


class ImproperUniform(dist.TorchDistribution):
    """Constant density on [lower, upper]; cannot be sampled directly."""

    arg_constraints = {}

    def __init__(self, lower=-math.inf, upper=math.inf, shape=()):
        self.lower, self.upper = lower, upper
        super().__init__(batch_shape=torch.Size(shape))

    def sample(self, sample_shape=torch.Size()):
        raise NotImplementedError("ImproperUniform has no sampler; use MCMC")

    def log_prob(self, value):
        inside = (value >= self.lower) & (value <= self.upper)
        return torch.where(inside, torch.zeros_like(value), torch.full_like(value, -math.inf))
'''

_BINARY = {
    "add": "+",
    "subtract": "-",
    "multiply": "*",
    "divide": "/",
    "modulus": "%",
    "elt_multiply": "*",
    "elt_divide": "/",
    "pow": "**",
    "logical_eq": "==",
    "logical_neq": "!=",
    "logical_lt": "<",
    "logical_lte": "<=",
    "logical_gt": ">",
    "logical_gte": ">=",
    "logical_and": "and",
    "logical_or": "or",
}

_FUNCTIONS = {
    "exp": "torch.exp",
    "log": "torch.log",
    "sqrt": "torch.sqrt",
    "square": "torch.square",
    "tanh": "torch.tanh",
    "sin": "torch.sin",
    "cos": "torch.cos",
    "fabs": "torch.abs",
    "abs": "abs",
    "floor": "torch.floor",
    "ceil": "torch.ceil",
    "inv_logit": "torch.sigmoid",
    "logit": "torch.logit",
    "log1p": "torch.log1p",
    "expm1": "torch.expm1",
    "lgamma": "torch.lgamma",
    "sum": "torch.sum",
    "mean": "torch.mean",
    "sd": "torch.std",
    "variance": "torch.var",
    "max": "torch.max",
    "min": "torch.min",
    "softmax": "torch.softmax",
    "cumulative_sum": "torch.cumsum",
    "transpose": "torch.t",
    "to_vector": "torch.flatten",
    "size": "len",
    "rows": "len",
}

_DISTRIBUTIONS = {
    "normal": ("dist.Normal", None),
    "cauchy": ("dist.Cauchy", None),
    "student_t": ("dist.StudentT", None),
    "lognormal": ("dist.LogNormal", None),
    "exponential": ("dist.Exponential", None),
    "gamma": ("dist.Gamma", None),
    "beta": ("dist.Beta", None),
    "uniform": ("dist.Uniform", None),
    "bernoulli": ("dist.Bernoulli", None),
    "bernoulli_logit": ("dist.Bernoulli", ("logits",)),
    "binomial": ("dist.Binomial", None),
    "binomial_logit": ("dist.Binomial", (None, "logits")),
    "poisson": ("dist.Poisson", None),
    "categorical": ("dist.Categorical", ("probs",)),
    "categorical_logits": ("dist.Categorical", ("logits",)),
}

_ONE_BASED = ("categorical", "categorical_logits")


def _number(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if math.isinf(v):
        return "math.inf" if v > 0 else "-math.inf"
    if math.isnan(v):
        return "math.nan"
    return repr(float(v))


def _ident(name: str) -> str:
    return name + "_" if keyword.iskeyword(name) else name


def _site_base(e) -> str:
    """Observed variable's name, else the first variable the expression reads."""
    while isinstance(e, A.Index):
        e = e.base
    if isinstance(e, A.Var):
        return e.name
    return next((n.name for n in A.walk(e) if isinstance(n, A.Var)), "obs")


class _Emitter:
    def __init__(self, networks: dict):
        self.networks = networks  # name -> class
        self.lifted: set = set()
        self.prior_nets: list = []  # networks whose priors dictionary exists
        self.counters: dict = {}
        self.sites: set = set()
        self.whiles = 0

    # expressions

    def expr(self, e) -> str:
        if isinstance(e, A.Const):
            return _number(e.value)
        if isinstance(e, A.Var):
            return self.var(e.name)
        if isinstance(e, (A.ArrayLit, A.VectorLit)):
            return "torch.tensor([" + ", ".join(self.expr(x) for x in e.items) + "])"
        if isinstance(e, A.MatrixLit):
            rows = ", ".join("[" + ", ".join(self.expr(x) for x in r) + "]" for r in e.rows)
            return f"torch.tensor([{rows}])"
        if isinstance(e, A.Index):
            return f"{self.expr(e.base)}[{', '.join(self.index(i) for i in e.indices)}]"
        if isinstance(e, A.Call):
            return self.call(e)
        raise TypeError(e)

    def var(self, name: str) -> str:
        if A.is_network_path(name):
            net, rest = name.split(".", 1)
            if net in self.lifted:
                return f"{net}_params[{rest!r}]"
            return name
        return _ident(name)

    def index(self, i) -> str:
        if isinstance(i, A.Const) and isinstance(i.value, int):
            return str(i.value - 1)
        return f"{self.expr(i)} - 1"

    def shape(self, dims) -> str:
        """Python shape arguments for a size list or a ``shape(e)`` call."""
        if isinstance(dims, A.Call) and dims.name == "shape":
            return self.expr(dims.args[0]) + (".shape" if self._is_net_value(dims.args[0]) else ".size()")
        if isinstance(dims, A.ArrayLit):
            dims = dims.items
        return ", ".join(self.expr(d) for d in dims)

    def _is_net_value(self, e) -> bool:
        return isinstance(e, A.Var) and A.is_network_path(e.name) and e.name.split(".", 1)[0] not in self.lifted

    def fill(self, value, shape: str) -> str:
        if isinstance(value, A.Const) and value.value == 0:
            return f"zeros({shape})"
        if isinstance(value, A.Const) and value.value == 1:
            return f"ones({shape})"
        dims = shape if "(" in shape else f"({shape},)" if "," not in shape else f"({shape})"
        return f"full({dims}, {self.expr(value)})"

    def call(self, e: A.Call) -> str:
        n, args = e.name, e.args
        if n in _BINARY:
            return f"({self.expr(args[0])} {_BINARY[n]} {self.expr(args[1])})"
        if n == "minus":
            return f"(-{self.expr(args[0])})"
        if n == "plus":
            return self.expr(args[0])
        if n == "logical_neg":
            return f"(not {self.expr(args[0])})"
        if n == "broadcast":
            return self.fill(args[0], self.shape(args[1]))
        if n in ("rep_vector", "rep_row_vector"):
            return self.fill(args[0], self.expr(args[1]))
        if n == "shape":
            return self.shape(e)
        if n.startswith("empty_"):
            dims = self.shape(args[-1])
            shape = ", ".join(([dims] if dims else []) + [self.expr(s) for s in args[:-1]]) or "()"
            dtype = ", dtype=torch.long" if n == "empty_int" else ""
            return f"zeros({shape}{dtype})"
        if n == "undefined":
            return "None"
        if n == "not_a_number":
            return "math.nan"
        if n in ("positive_infinity", "negative_infinity"):
            return "math.inf" if n[0] == "p" else "-math.inf"
        if n in ("pi", "e"):
            return f"math.{n}"
        if n == "dot_self":
            return f"torch.sum({self.expr(args[0])} ** 2)"
        if n == "dot_product":
            return f"torch.dot({self.expr(args[0])}, {self.expr(args[1])})"
        if n in self.networks:
            fn = f"lifted_{n}" if n in self.lifted else n
            return f"{fn}({', '.join(self.expr(a) for a in args)})"
        return f"{_FUNCTIONS.get(n, n)}({', '.join(self.expr(a) for a in args)})"

    def dist(self, d: A.Call, shape: str | None = None) -> str:
        if d.name == "improper_uniform":
            lo, hi = d.args
            kw = []
            if not (isinstance(lo, A.Const) and lo.value == -math.inf):
                kw.append(f"lower={self.expr(lo)}")
            if not (isinstance(hi, A.Const) and hi.value == math.inf):
                kw.append(f"upper={self.expr(hi)}")
            if shape:
                kw.append(f"shape={shape}")
            return f"ImproperUniform({', '.join(kw)})"
        cls, names = _DISTRIBUTIONS.get(d.name, (d.name, None))
        args = [self.expr(a) for a in d.args]
        if names:
            args = [a if k is None else f"{k}={a}" for k, a in zip(names, args)]
        text = f"{cls}({', '.join(args)})"
        return f"{text}.expand({shape})" if shape else text

    def type_shape(self, vt: TypeDesc | None) -> str | None:
        if vt is None:
            return None
        if isinstance(vt.dims, A.Call):
            arg = vt.dims.args[0]
            return self.expr(arg) + (".shape" if self._is_net_value(arg) else ".size()")
        items = [self.expr(s) for s in tuple(vt.dims) + tuple(vt.sizes)]
        return "(" + ", ".join(items) + ("," if len(items) == 1 else "") + ")"

    # sites

    def site(self, base: str, loops: list) -> str:
        self.counters[base] = self.counters.get(base, 0) + 1
        name = f"{base}__{self.counters[base]}" + "".join(f"_{{{i}}}" for i in loops)
        if name in self.sites:
            raise AssertionError(f"duplicate site name {name}")
        self.sites.add(name)
        return f"f{name!r}" if loops else repr(name)

    # statements

    def block(self, g, depth: int, loops: list, final) -> list:
        pad = "    " * depth
        out: list = []
        while True:
            if isinstance(g, Let):
                out.extend(self.let(g, depth, loops))
                g = g.body
                continue
            if isinstance(g, If):
                out.append(f"{pad}if {self.expr(g.cond)}:")
                out.extend(self.block(g.then, depth + 1, loops, final) or [pad + "    pass"])
                out.append(f"{pad}else:")
                out.extend(self.block(g.orelse, depth + 1, loops, final) or [pad + "    pass"])
                return out
            if isinstance(g, Return):
                if final is not None:
                    out.append(pad + final(self, g.value))
                return out
            if isinstance(g, (Factor, Observe, Sample, Param, For, While)):
                out.extend(self.let(Let(PUnit(), g, Return(Unit())), depth, loops))
                return out
            out.append(pad + self.expr(g))
            return out

    def let(self, g: Let, depth: int, loops: list) -> list:
        pad = "    " * depth
        pat, v = g.pat, g.value
        if isinstance(v, For):
            head = f"{pad}for {_ident(v.var)} in range({self.expr(v.lo)}, {self.expr(v.hi)} + 1):"
            return [head, *(self.block(v.body, depth + 1, loops + [_ident(v.var)], None) or [pad + "    pass"])]
        if isinstance(v, While):
            self.whiles += 1
            counter = f"_while{self.whiles}"
            body = self.block(v.body, depth + 1, loops + [counter], None)
            return [f"{pad}{counter} = 0", f"{pad}while {self.expr(v.cond)}:", f"{pad}    {counter} += 1", *body]
        if isinstance(v, Factor):
            site = self.site("target", loops)
            return [f"{pad}pyro.sample({site}, dist.Exponential(1.0), obs=-({self.expr(v.expr)}))"]
        if isinstance(v, Observe):
            site = self.site(_site_base(v.value), loops)
            obs = self.expr(v.value)
            if v.dist.name in _ONE_BASED:
                obs = f"{obs} - 1"
            return [f"{pad}pyro.sample({site}, {self.dist(v.dist)}, obs={obs})"]
        if isinstance(v, Sample) and isinstance(pat, PVar):
            return self.sample(pat.name, v, pad)
        if isinstance(v, Param) and isinstance(pat, PVar):
            shape = self.type_shape(v.vtype) if (v.vtype.sizes or v.vtype.dims) else "()"
            return [f"{pad}{_ident(pat.name)} = pyro.param({pat.name!r}, randn({shape}))"]
        if isinstance(v, Return) and isinstance(pat, PVar):
            return [f"{pad}{self.var(pat.name)} = {self.ret_value(v.value)}"]
        if isinstance(pat, PIndex):
            idx = ", ".join(self.index(i) for i in pat.indices)
            return [f"{pad}{self.var(pat.name)}[{idx}] = {self.expr(v)}"]
        if isinstance(pat, PUnit):
            return []
        return [f"{pad}{self.pattern(pat)} = {self.expr(v) if not isinstance(v, Return) else self.ret_value(v.value)}"]

    def sample(self, name: str, v: Sample, pad: str) -> list:
        shape = self.type_shape(v.vtype)
        if A.is_network_path(name):
            net, rest = name.split(".", 1)
            lines = []
            if net not in self.prior_nets:
                self.prior_nets.append(net)
                lines.append(f"{pad}{net}_priors = {{}}")
            lines.append(f"{pad}{net}_priors[{rest!r}] = {self.dist(v.dist, shape)}")
            return lines
        return [f"{pad}{_ident(name)} = pyro.sample({name!r}, {self.dist(v.dist, shape)})"]

    def pattern(self, p) -> str:
        if isinstance(p, PVar):
            return self.var(p.name)
        if isinstance(p, PTuple):
            return ", ".join(self.var(n) for n in p.names) + ("," if len(p.names) == 1 else "")
        return "_"

    def ret_value(self, v) -> str:
        if isinstance(v, Unit):
            return "None"
        if isinstance(v, TupleE):
            return "(" + ", ".join(self.expr(i) for i in v.items) + ("," if len(v.items) == 1 else "") + ")"
        return self.expr(v)


def _lift_networks(lines: list, em: _Emitter) -> list:
    """Insert the ``random_module`` lifting after each network's last prior."""
    out = list(lines)
    for net in em.prior_nets:
        marker = f"{net}_priors["
        last = max(i for i, line in enumerate(out) if line.lstrip().startswith(marker))
        pad = out[last][: len(out[last]) - len(out[last].lstrip())]
        out[last + 1 : last + 1] = [
            f"{pad}lifted_{net} = pyro.random_module({net!r}, {net}, {net}_priors)()",
            f"{pad}{net}_params = dict(lifted_{net}.named_parameters())",
        ]
    return out


def _network_sites(g) -> dict:
    counts: dict = {}
    for node in gwalk(g):
        if isinstance(node, Let) and isinstance(node.pat, PVar) and isinstance(node.value, Sample):
            if A.is_network_path(node.pat.name):
                net = node.pat.name.split(".", 1)[0]
                counts[net] = counts.get(net, 0) + 1
    return counts


def _function(name: str, args, g, networks: dict, final) -> str:
    """One Python function; a network switches to its lifted module after its last prior."""
    em = _Emitter(networks)
    remaining = _network_sites(g)
    body: list = []
    while isinstance(g, Let):
        body.extend(em.let(g, 1, []))
        if isinstance(g.pat, PVar) and isinstance(g.value, Sample) and A.is_network_path(g.pat.name):
            net = g.pat.name.split(".", 1)[0]
            remaining[net] -= 1
            if remaining[net] == 0:
                em.lifted.add(net)
        g = g.body
    body.extend(em.block(g, 1, [], final))
    body = _lift_networks(body, em)
    head = f"def {name}({', '.join(_ident(a) for a in args)}):"
    return "\n".join([head, *(body or ["    pass"])]) + "\n"


def _return_tuple(em: _Emitter, v) -> str:
    return "return " + em.ret_value(v)


def _return_dict(em: _Emitter, v) -> str:
    items = v.items if isinstance(v, TupleE) else ()
    return "return {" + ", ".join(f"{i.name!r}: {em.var(i.name)}" for i in items) + "}"


def emit_pyro(phased, program: A.Program) -> str:
    """Python source with ``model``, optional ``guide`` and the phase functions."""
    networks = {n.name: n.cls for n in program.networks}
    data = [d.name for d in program.decls("data")]
    td = list(phased.phases.transformed_data.outputs)
    params = [d.name for d in program.param_decls if not A.is_network_path(d.name)]
    inputs = list(networks) + data + td
    parts = [HEADER]
    parts.append(_function("transformed_data", data, phased.transformed_data, networks, _return_dict))
    parts.append(_function("model", inputs, phased.model, networks, _return_tuple))
    if phased.guide is not None:
        parts.append(_function("guide", inputs, phased.guide, networks, _return_tuple))
    parts.append(_function("generated_quantities", data + td + params, phased.generated_quantities, networks, _return_dict))
    return "\n\n".join(parts)
