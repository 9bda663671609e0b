"""Distribution registry: log densities, samplers and supports.

Continuous densities include their normalizing constants; discrete ones
are log-pmfs. Vectorized calls sum the elementwise log densities in index
order, so a vectorized tilde and the equivalent loop agree exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .values import Dist, StanRuntimeError, flatten, is_container, like

LOG_2PI = math.log(2 * math.pi)
NEG_INF = -math.inf


def _domain(ok: bool, dist: str, what: str) -> None:
    if not ok:
        raise StanRuntimeError("domain-error", f"{dist}: {what}")


def _xlogy(x, y):
    if x == 0:
        return 0.0
    return x * math.log(y) if y > 0 else NEG_INF


def _is_int(y) -> bool:
    return isinstance(y, int) or (isinstance(y, float) and y.is_integer())


def _lbeta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def _log1p_exp(x):
    return x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))


def _log_sum_exp(xs):
    m = max(xs)
    if m == NEG_INF or m == math.inf:
        return m
    return m + math.log(sum(math.exp(x - m) for x in xs))


# scalar log densities


def normal_lpdf(y, mu, sigma):
    _domain(sigma > 0, "normal", "scale must be positive")
    z = (y - mu) / sigma
    return -0.5 * z * z - math.log(sigma) - 0.5 * LOG_2PI


def cauchy_lpdf(y, mu, sigma):
    _domain(sigma > 0, "cauchy", "scale must be positive")
    z = (y - mu) / sigma
    return -math.log(math.pi) - math.log(sigma) - math.log1p(z * z)


def student_t_lpdf(y, nu, mu, sigma):
    _domain(nu > 0 and sigma > 0, "student_t", "degrees of freedom and scale must be positive")
    z = (y - mu) / sigma
    return (
        math.lgamma((nu + 1) / 2)
        - math.lgamma(nu / 2)
        - 0.5 * math.log(nu * math.pi)
        - math.log(sigma)
        - (nu + 1) / 2 * math.log1p(z * z / nu)
    )


def lognormal_lpdf(y, mu, sigma):
    _domain(sigma > 0, "lognormal", "scale must be positive")
    if y <= 0:
        return NEG_INF
    return normal_lpdf(math.log(y), mu, sigma) - math.log(y)


def exponential_lpdf(y, beta):
    _domain(beta > 0, "exponential", "rate must be positive")
    if y < 0:
        return NEG_INF
    return math.log(beta) - beta * y


def gamma_lpdf(y, alpha, beta):
    _domain(alpha > 0 and beta > 0, "gamma", "shape and rate must be positive")
    if y < 0:
        return NEG_INF
    return alpha * math.log(beta) - math.lgamma(alpha) + _xlogy(alpha - 1, y) - beta * y


def beta_lpdf(y, a, b):
    _domain(a > 0 and b > 0, "beta", "shapes must be positive")
    if y < 0 or y > 1:
        return NEG_INF
    return _xlogy(a - 1, y) + _xlogy(b - 1, 1 - y) - _lbeta(a, b)


def uniform_lpdf(y, lo, hi):
    _domain(lo < hi, "uniform", "lower bound must be below upper bound")
    if y < lo or y > hi:
        return NEG_INF
    return -math.log(hi - lo)


def improper_uniform_lpdf(y, lo, hi):
    if y < lo or y > hi or math.isnan(y):
        return NEG_INF
    return 0.0


def bernoulli_lpmf(y, theta):
    _domain(0 <= theta <= 1, "bernoulli", "probability must be in [0, 1]")
    if y == 1:
        return _xlogy(1, theta)
    if y == 0:
        return _xlogy(1, 1 - theta)
    return NEG_INF


def bernoulli_logit_lpmf(y, alpha):
    if y == 1:
        return -_log1p_exp(-alpha)
    if y == 0:
        return -_log1p_exp(alpha)
    return NEG_INF


def binomial_lpmf(n, N, theta):
    _domain(0 <= theta <= 1 and N >= 0, "binomial", "invalid parameters")
    if not _is_int(n) or n < 0 or n > N:
        return NEG_INF
    lchoose = math.lgamma(N + 1) - math.lgamma(n + 1) - math.lgamma(N - n + 1)
    return lchoose + _xlogy(n, theta) + _xlogy(N - n, 1 - theta)


def binomial_logit_lpmf(n, N, alpha):
    _domain(N >= 0, "binomial_logit", "invalid trials")
    if not _is_int(n) or n < 0 or n > N:
        return NEG_INF
    lchoose = math.lgamma(N + 1) - math.lgamma(n + 1) - math.lgamma(N - n + 1)
    return lchoose - n * _log1p_exp(-alpha) - (N - n) * _log1p_exp(alpha)


def poisson_lpmf(n, lam):
    _domain(lam >= 0, "poisson", "rate must be non-negative")
    if not _is_int(n) or n < 0:
        return NEG_INF
    return _xlogy(n, lam) - lam - math.lgamma(n + 1)


def poisson_log_lpmf(n, alpha):
    if not _is_int(n) or n < 0:
        return NEG_INF
    return n * alpha - math.exp(alpha) - math.lgamma(n + 1)


def categorical_lpmf(y, theta):
    k = len(theta)
    if not _is_int(y) or y < 1 or y > k:
        return NEG_INF
    return math.log(theta[int(y) - 1]) if theta[int(y) - 1] > 0 else NEG_INF


def categorical_logits_lpmf(y, beta):
    k = len(beta)
    if not _is_int(y) or y < 1 or y > k:
        return NEG_INF
    return beta[int(y) - 1] - _log_sum_exp(list(beta))


# samplers (numpy Generator)


def _categorical(rng, theta):
    return int(rng.choice(len(theta), p=list(theta))) + 1


def _softmax(beta):
    m = max(beta)
    e = [math.exp(b - m) for b in beta]
    s = sum(e)
    return [x / s for x in e]


@dataclass(frozen=True)
class DistSpec:
    name: str
    lpdf: Callable
    sampler: Optional[Callable]
    discrete: bool = False
    vector_params: tuple = ()  # parameter positions that take a whole vector

    @property
    def arity(self) -> int:
        return self.lpdf.__code__.co_argcount - 1

    @property
    def has_sampler(self) -> bool:
        return self.sampler is not None


REGISTRY: dict[str, DistSpec] = {
    s.name: s
    for s in [
        DistSpec("normal", normal_lpdf, lambda r, mu, s: float(r.normal(mu, s))),
        DistSpec("cauchy", cauchy_lpdf, lambda r, mu, s: float(mu + s * r.standard_cauchy())),
        DistSpec("student_t", student_t_lpdf, lambda r, nu, mu, s: float(mu + s * r.standard_t(nu))),
        DistSpec("lognormal", lognormal_lpdf, lambda r, mu, s: float(r.lognormal(mu, s))),
        DistSpec("exponential", exponential_lpdf, lambda r, b: float(r.exponential(1 / b))),
        DistSpec("gamma", gamma_lpdf, lambda r, a, b: float(r.gamma(a, 1 / b))),
        DistSpec("beta", beta_lpdf, lambda r, a, b: float(r.beta(a, b))),
        DistSpec("uniform", uniform_lpdf, lambda r, lo, hi: float(r.uniform(lo, hi))),
        DistSpec("improper_uniform", improper_uniform_lpdf, None),
        DistSpec("bernoulli", bernoulli_lpmf, lambda r, t: int(r.random() < t), True),
        DistSpec(
            "bernoulli_logit",
            bernoulli_logit_lpmf,
            lambda r, a: int(r.random() < 1 / (1 + math.exp(-a))),
            True,
        ),
        DistSpec("binomial", binomial_lpmf, lambda r, n, t: int(r.binomial(n, t)), True),
        DistSpec(
            "binomial_logit",
            binomial_logit_lpmf,
            lambda r, n, a: int(r.binomial(n, 1 / (1 + math.exp(-a)))),
            True,
        ),
        DistSpec("poisson", poisson_lpmf, lambda r, lam: int(r.poisson(lam)), True),
        DistSpec("poisson_log", poisson_log_lpmf, lambda r, a: int(r.poisson(math.exp(a))), True),
        DistSpec("categorical", categorical_lpmf, _categorical, True, (0,)),
        DistSpec(
            "categorical_logits",
            categorical_logits_lpmf,
            lambda r, b: _categorical(r, _softmax(b)),
            True,
            (0,),
        ),
    ]
}


def spec(name: str) -> DistSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        raise StanRuntimeError("unknown-distribution", f"no runtime support for '{name}'") from None


def _elementwise(name: str, values: list):
    """Flatten container arguments and check they have a common length."""
    flats = [flatten(v) if is_container(v) else None for v in values]
    lengths = {len(f) for f in flats if f is not None}
    if len(lengths) > 1:
        raise StanRuntimeError("size-mismatch", f"{name}: vectorized arguments have sizes {sorted(lengths)}")
    n = lengths.pop() if lengths else None
    cols = [f if f is not None else None for f in flats]
    return n, cols


def log_density(d: Dist, y) -> float:
    """Vectorized log density of ``y`` under ``d`` (sum of elementwise terms)."""
    s = spec(d.name)
    if not isinstance(y, tuple) and not any(isinstance(p, tuple) for p in d.params) and len(d.params) == s.arity:
        return s.lpdf(y, *d.params)
    arity = s.arity
    if len(d.params) != arity:
        raise StanRuntimeError(
            "arity-mismatch", f"{d.name} takes {arity} parameter(s), got {len(d.params)}"
        )
    fixed = {i: p for i, p in enumerate(d.params) if i in s.vector_params}
    free = [p for i, p in enumerate(d.params) if i not in s.vector_params]
    n, cols = _elementwise(d.name, [y, *free])
    if n is None:
        return s.lpdf(y, *_merge(fixed, free, len(d.params)))
    total = 0.0
    for k in range(n):
        row = [c[k] if c is not None else v for c, v in zip(cols, [y, *free])]
        total += s.lpdf(row[0], *_merge(fixed, row[1:], len(d.params)))
    return total


def _merge(fixed: dict, free: list, n: int) -> list:
    it = iter(free)
    return [fixed[i] if i in fixed else next(it) for i in range(n)]


def draw(d: Dist, rng, template=None):
    """Draw from ``d``; with container parameters (or a template) draw elementwise."""
    s = spec(d.name)
    if s.sampler is None:
        raise StanRuntimeError("improper-prior-needs-mcmc", f"cannot sample from {d.name}; use --method mh")
    fixed = {i: p for i, p in enumerate(d.params) if i in s.vector_params}
    free = [p for i, p in enumerate(d.params) if i not in s.vector_params]
    n, cols = _elementwise(d.name, free)
    if template is not None:
        count = len(flatten(template))
        if n is not None and n != count:
            raise StanRuntimeError("size-mismatch", f"{d.name}: parameters have size {n}, expected {count}")
        n = count
    if n is None:
        return s.sampler(rng, *_merge(fixed, free, len(d.params)))
    flat = []
    for k in range(n):
        row = [c[k] if c is not None else v for c, v in zip(cols, free)]
        flat.append(s.sampler(rng, *_merge(fixed, row, len(d.params))))
    if template is None:
        template = next(v for v in free if is_container(v))
    return like(template, flat)
