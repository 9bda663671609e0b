import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from stan2gprob.compiler import compile_source
from stan2gprob.frontend import ast as A
from stan2gprob.gprob import observe_to_factor, parse_gprob
from stan2gprob.gprob.ir import Factor, Let, PUnit, Return, Unit
from stan2gprob.runtime.distributions import log_density, spec
from stan2gprob.runtime.engine import run_trace
from stan2gprob.runtime.inference import ess, importance_sample, infer, metropolis, summarize
from stan2gprob.runtime.values import Dist, StanRuntimeError
from stan2gprob.stan_eval import load_inputs, run_model

from conftest import PINS, data_file, random_inputs, random_programs, source


def loaded(c, data, params):
    env = load_inputs(c.data_decls, data, check=False)
    return env, load_inputs(c.kernel.param_decls, params, env, check=False)


class TestTraces:
    def test_coin_pinned_matches_oracle(self):
        c = compile_source(source("coin"))
        env, pins = loaded(c, {"N": 2, "x": [1, 0]}, {"z": 0.5})
        t = run_trace(c.model, env, pinned=pins)
        assert t.log_weight == pytest.approx(2 * math.log(0.5), rel=1e-12)
        assert t.return_value == 0.5 and t.values == {"z": 0.5}

    def test_factor_constant(self):
        g = Let(PUnit(), Factor(A.Const(3.0)), Return(Unit()))
        assert run_trace(g, {}, rng=np.random.default_rng(0)).log_weight == 3.0

    def test_uniform_sample_has_zero_weight(self):
        g = parse_gprob("let x = sample(uniform(0, 1)) in\nreturn(x)\n")
        t = run_trace(g, {}, rng=np.random.default_rng(1))
        assert t.log_weight == 0 and 0 <= t.return_value <= 1

    def test_prior_lpdf_flag(self):
        g = parse_gprob("let x = sample(uniform(0, 4)) in\nreturn(x)\n")
        t = run_trace(g, {}, pinned={"x": 1.0}, include_prior_lpdf=True)
        assert t.log_weight == pytest.approx(math.log(0.25), rel=1e-12)

    def test_improper_prior_cannot_be_sampled(self):
        c = compile_source(source("double_normal"))
        with pytest.raises(StanRuntimeError) as exc:
            run_trace(c.model, {}, rng=np.random.default_rng(0))
        assert exc.value.code == "improper-prior-needs-mcmc"

    def test_missing_pinned_site(self):
        c = compile_source(source("double_normal"))
        with pytest.raises(StanRuntimeError) as exc:
            run_trace(c.model, {}, pinned={})
        assert exc.value.code == "missing-site"

    def test_while_loop_state(self):
        src = """data { int n; } parameters { real p; }
        model { int k; real acc; k = 0; acc = 0; while (k < n) { k = k + 1; acc = acc + k * k; } target += acc; }"""
        c = compile_source(src)
        for n in range(6):
            t = run_trace(c.model, {"n": n}, pinned={"p": 0.0})
            assert t.log_weight == sum(k * k for k in range(1, n + 1))


class TestDistributions:
    def test_improper_uniform_capabilities(self):
        s = spec("improper_uniform")
        assert not s.has_sampler
        assert log_density(Dist("improper_uniform", (0.0, math.inf)), 5.0) == 0.0
        assert log_density(Dist("improper_uniform", (0.0, math.inf)), -1.0) == -math.inf

    @pytest.mark.parametrize(
        "dist, y, oracle",
        [
            (Dist("normal", (1.0, 2.0)), 0.3, stats.norm(1, 2).logpdf(0.3)),
            (Dist("beta", (2.0, 5.0)), 0.3, stats.beta(2, 5).logpdf(0.3)),
            (Dist("bernoulli", (0.3,)), 1, stats.bernoulli(0.3).logpmf(1)),
            (Dist("uniform", (-1.0, 3.0)), 0.0, stats.uniform(-1, 4).logpdf(0.0)),
            (Dist("exponential", (2.0,)), 0.7, stats.expon(scale=0.5).logpdf(0.7)),
            (Dist("binomial_logit", (10, 0.4)), 3, stats.binom(10, 1 / (1 + math.exp(-0.4))).logpmf(3)),
            (
                Dist("categorical_logits", ((0.1, 0.5, -1.0),)),
                2,
                math.log(np.exp([0.1, 0.5, -1.0])[1] / np.exp([0.1, 0.5, -1.0]).sum()),
            ),
        ],
    )
    def test_lpdf_against_scipy(self, dist, y, oracle):
        assert log_density(dist, y) == pytest.approx(oracle, rel=1e-12)

    def test_outside_support(self):
        assert log_density(Dist("beta", (2.0, 2.0)), 1.5) == -math.inf


def _oracle_pairs(name, k, seed):
    c = compile_source(source(name))
    rng = np.random.default_rng(seed)
    for _ in range(k):
        data, params = PINS[name](rng)
        env, pins = loaded(c, data, params)
        yield c, env, pins, run_model(c.kernel, data, params)["target"]


@pytest.mark.parametrize("name", sorted(PINS))
def test_pinned_weight_equals_target(name):
    for c, env, pins, target in _oracle_pairs(name, 20, 5):
        assert run_trace(c.model, env, pinned=pins).log_weight == pytest.approx(target, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("name", sorted(PINS))
def test_observe_and_factor_are_identical(name):
    for c, env, pins, _ in _oracle_pairs(name, 10, 6):
        a = run_trace(c.model, env, pinned=pins).log_weight
        b = run_trace(observe_to_factor(c.model), env, pinned=pins).log_weight
        assert a == b


def test_observe_to_factor_removes_observes():
    c = compile_source(source("coin"))
    text = repr(observe_to_factor(c.model))
    assert "Observe(" not in text and "bernoulli_lpmf" not in text and "bernoulli_lpdf" in text


@settings(max_examples=100, deadline=None)
@given(random_programs, random_inputs())
def test_random_programs_match_oracle(src, inputs):
    data, params = inputs
    c = compile_source(src)
    env, pins = loaded(c, data, params)
    target = run_model(c.kernel, data, params)["target"]
    weight = run_trace(c.model, env, pinned=pins).log_weight
    assert weight == pytest.approx(target, rel=1e-9, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_replay_reproduces_weight(seed):
    c = compile_source(source("coin"))
    env = load_inputs(c.data_decls, data_file("coin"))
    t = run_trace(c.model, env, rng=np.random.default_rng(seed))
    assert run_trace(c.model, env, pinned=t).log_weight == t.log_weight


class TestInference:
    def test_no_observes_gives_full_ess(self):
        g = parse_gprob("let x = sample(normal(0, 1)) in\nreturn(x)\n")
        d = importance_sample(g, {}, 500, seed=0)
        assert d.diagnostics["ess"] == pytest.approx(500)

    def test_degenerate_weights(self):
        g = parse_gprob("let x = sample(normal(0, 1)) in\nlet () = factor(-inf) in\nreturn(x)\n")
        with pytest.raises(StanRuntimeError) as exc:
            importance_sample(g, {}, 10, seed=0)
        assert exc.value.code == "degenerate-weights"

    def test_ess_formula(self):
        lw = np.log(np.array([1.0, 2.0, 3.0]))
        assert ess(lw) == pytest.approx(36 / 14)

    def test_is_coin_small(self):
        c = compile_source(source("coin"))
        env = load_inputs(c.data_decls, data_file("coin"))
        s = summarize(importance_sample(c.model, env, 20000, seed=3))
        assert s["z"]["mean"] == pytest.approx(stats.beta(8, 4).mean(), abs=0.02)

    def test_mh_and_is_agree_on_coin(self):
        c = compile_source(source("coin"))
        env = load_inputs(c.data_decls, data_file("coin"))
        a = summarize(importance_sample(c.model, env, 20000, seed=1))["z"]["mean"]
        b = summarize(metropolis(c.model, env, 20000, seed=1))["z"]["mean"]
        assert a == pytest.approx(b, abs=0.02)

    def test_init_outside_support(self):
        c = compile_source(source("coin"))
        env = load_inputs(c.data_decls, data_file("coin"))
        with pytest.raises(StanRuntimeError) as exc:
            metropolis(c.model, env, 10, init={"z": 1.5})
        assert exc.value.code == "init-outside-support"

    def test_zero_acceptance_warns(self):
        c = compile_source(source("double_normal"))
        d = metropolis(c.model, {}, 50, step=1e6, seed=0, init={"theta": 1000.0})
        assert d.diagnostics["accept_rate"] == 0 and d.warnings

    def test_vector_parameter_components(self):
        c = compile_source(source("left_expression"))
        d = metropolis(c.model, {"N": 2}, 200, step=0.001, seed=0, init={"phi": (0.0, 0.0)})
        assert d.names == ["phi[1]", "phi[2]"]

    def test_seeded_runs_are_reproducible(self):
        c = compile_source(source("coin"))
        env = load_inputs(c.data_decls, data_file("coin"))
        opts = {"samples": 2000}
        assert infer("is", c.model, env, opts, seed=4) == infer("is", c.model, env, opts, seed=4)

    def test_chains_record_spawn_keys(self):
        c = compile_source(source("coin"))
        env = load_inputs(c.data_decls, data_file("coin"))
        out = infer("mh", c.model, env, {"samples": 500}, seed=2, chains=2)
        assert [ch["spawn_key"] for ch in out["chains"]] == [[0], [1]]
        assert out["draws"] == 2 * 50
