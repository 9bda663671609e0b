"""Self-normalized importance sampling and random-walk Metropolis."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import compile_gprob
from .values import StanRuntimeError, dims_of, flatten, like


@dataclass
class Draws:
    """Flattened scalar draws with optional log importance weights."""

    names: list
    values: np.ndarray  # (draws, components)
    log_weights: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def weights(self) -> np.ndarray:
        if self.log_weights is None:
            return np.full(len(self.values), 1.0 / len(self.values))
        w = np.exp(self.log_weights - np.max(self.log_weights))
        return w / w.sum()


def component_names(values: dict) -> list:
    """Scalar component names, e.g. ``z``, ``phi[2]``, ``m[1,3]``."""
    out = []
    for site, v in values.items():
        if not isinstance(v, tuple):
            out.append(site)
            continue
        for idx in itertools.product(*(range(1, d + 1) for d in dims_of(v))):
            out.append(f"{site}[{','.join(map(str, idx))}]")
    return out


def _flat(values: dict) -> list:
    out = []
    for v in values.values():
        out.extend(flatten(v)) if isinstance(v, tuple) else out.append(v)
    return out


def ess(log_weights: np.ndarray) -> float:
    w = np.exp(log_weights - np.max(log_weights))
    return float(w.sum() ** 2 / (w**2).sum())


def importance_sample(g, data: dict, n: int, seed=0) -> Draws:
    """Prior proposals weighted by the trace log-weight."""
    prog = compile_gprob(g)
    rng = np.random.default_rng(seed)
    rows, lws = [], np.empty(n)
    names = None
    for k in range(n):
        t = prog.run(data, rng=rng)
        if names is None:
            names = component_names(t.values)
        rows.append(_flat(t.values))
        lws[k] = t.log_weight
    if n == 0 or not np.any(np.isfinite(lws)) or np.nanmax(lws) == -np.inf:
        raise StanRuntimeError("degenerate-weights", "every importance weight is zero")
    lws = np.where(np.isnan(lws), -np.inf, lws)
    values = np.array(rows, dtype=float).reshape(n, len(names))
    return Draws(names, values, lws, {"ess": ess(lws)})


def metropolis(g, data: dict, n: int, warmup: int | None = None, step: float = 0.5, seed=0, init: dict | None = None, thin: int = 10) -> Draws:
    """Random-walk Metropolis on the flattened parameter vector.

    ``n`` post-warmup iterations are run and every ``thin``-th state kept.
    The target is the pinned-run log-weight with prior densities included,
    so proposals outside a prior's support are rejected.
    """
    warmup = n // 10 if warmup is None else warmup
    prog = compile_gprob(g)
    rng = np.random.default_rng(seed)
    try:
        start = prog.run(data, rng=rng, pinned=dict(init or {}), init=True).values
    except StanRuntimeError as exc:
        if exc.code != "domain-error":
            raise
        raise StanRuntimeError("init-outside-support", f"the initial parameter values are invalid ({exc.message})") from None
    sites = list(start)
    templates = [start[s] for s in sites]
    sizes = [len(flatten(t)) if isinstance(t, tuple) else 1 for t in templates]

    def unflatten(x: list) -> dict:
        out, k = {}, 0
        for site, t, m in zip(sites, templates, sizes):
            out[site] = like(t, x[k : k + m]) if isinstance(t, tuple) else x[k]
            k += m
        return out

    def logp(x: list) -> float:
        try:
            lw = prog.run(data, pinned=unflatten(x), include_prior_lpdf=True).log_weight
        except StanRuntimeError as exc:
            if exc.code == "domain-error":
                return -math.inf
            raise
        return -math.inf if math.isnan(lw) else lw

    x = [float(v) for v in _flat(start)]
    lp = logp(x)
    if not math.isfinite(lp):
        raise StanRuntimeError("init-outside-support", "the initial parameter values have zero density")
    dim = len(x)
    kept, accepted = [], 0
    total = warmup + n
    noise = rng.standard_normal((total, dim)) * step
    logu = np.log(rng.random(total))
    for it in range(total):
        prop = [a + b for a, b in zip(x, noise[it].tolist())]
        lp_new = logp(prop)
        if logu[it] < lp_new - lp:
            x, lp = prop, lp_new
            if it >= warmup:
                accepted += 1
        if it >= warmup and (it - warmup) % thin == 0:
            kept.append(x)
    rate = accepted / n if n else 0.0
    warnings = ["zero acceptance after warmup; reduce --step"] if n and accepted == 0 else []
    values = np.array(kept, dtype=float).reshape(len(kept), dim)
    return Draws(component_names(start), values, None, {"accept_rate": rate}, warnings)


# summaries


def weighted_quantile(x: np.ndarray, w: np.ndarray, q: float) -> float:
    order = np.argsort(x, kind="stable")
    cum = np.cumsum(w[order])
    k = int(np.searchsorted(cum, q * cum[-1], side="left"))
    return float(x[order][min(k, len(x) - 1)])


def summarize(d: Draws) -> dict:
    w = d.weights()
    out = {}
    for j, name in enumerate(d.names):
        x = d.values[:, j]
        mean = float(np.sum(w * x))
        sd = float(math.sqrt(max(np.sum(w * (x - mean) ** 2), 0.0)))
        out[name] = {
            "mean": mean,
            "sd": sd,
            "q5": weighted_quantile(x, w, 0.05),
            "q50": weighted_quantile(x, w, 0.50),
            "q95": weighted_quantile(x, w, 0.95),
        }
    return out


# chains


def _run_chain(args):
    method, g, data, opts, seed = args
    if method == "is":
        return importance_sample(g, data, opts["samples"], seed)
    return metropolis(
        g, data, opts["samples"], opts.get("warmup"), opts.get("step", 0.5), seed, opts.get("init"), opts.get("thin", 10)
    )


def infer(method: str, g, data: dict, opts: dict, seed: int = 0, chains: int = 1) -> dict:
    """Run ``chains`` independent workers and merge them into one summary."""
    if method not in ("is", "mh"):
        raise ValueError(f"unknown method {method!r}")
    if chains <= 1:
        seeds = [seed]
        results = [_run_chain((method, g, data, opts, seed))]
    else:
        seeds = np.random.SeedSequence(seed).spawn(chains)
        with ProcessPoolExecutor(max_workers=chains) as pool:
            results = list(pool.map(_run_chain, [(method, g, data, opts, s) for s in seeds]))
    merged = Draws(
        results[0].names,
        np.concatenate([r.values for r in results]),
        None if method == "mh" else np.concatenate([r.log_weights for r in results]),
    )
    out = {"method": method, "seed": seed, "draws": len(merged.values), "parameters": summarize(merged)}
    if method == "is":
        out["ess"] = ess(merged.log_weights)
    else:
        out["accept_rate"] = float(np.mean([r.diagnostics["accept_rate"] for r in results]))
    if chains > 1:
        out["chains"] = [
            {"chain": k + 1, "spawn_key": list(s.spawn_key), **r.diagnostics} for k, (s, r) in enumerate(zip(seeds, results))
        ]
    warnings = [w for r in results for w in r.warnings]
    if warnings:
        out["warnings"] = warnings
    return out
