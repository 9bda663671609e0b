import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stan2gprob.diagnostics import CompileError
from stan2gprob.frontend import parse, program_to_str
from stan2gprob.normalize import allocation_schedule, inline_functions, is_kernel, kernelize, split_phases
from stan2gprob.stan_eval import load_inputs, run_model, run_phase

from conftest import PINS, source

PHASED = """
data { int N; real y[N]; }
transformed data { real ybar; ybar = mean(y); real s = 2 * ybar; }
parameters { real mu; real<lower=0> tau; }
transformed parameters { real shifted = mu + s; }
model {
  mu ~ normal(ybar, 1);
  tau ~ exponential(1);
  for (i in 1:N) y[i] ~ normal(shifted - s, tau);
}
generated quantities { real twice = 2 * shifted; }
"""

FUNCS = """
functions {
  real sq(real x) { return x * x; }
  void add_obs(real y, real m) { y ~ normal(m, 1); }
}
data { real y; }
parameters { real mu; }
model { real t; t = sq(mu); add_obs(y, t); target += sq(y); }
"""


def test_kernelize_keeps_only_core_blocks():
    k = kernelize(parse(PHASED))
    assert is_kernel(k)
    text = program_to_str(k)
    for block in ("transformed data", "transformed parameters", "generated quantities", "functions"):
        assert block not in text


def test_kernel_declarations_follow_block_order():
    k = kernelize(parse(PHASED))
    assert [d.name for d in k.model.decls] == ["ybar", "s", "shifted", "twice"]


def test_inlining_uses_deterministic_fresh_names():
    p = inline_functions(parse(FUNCS))
    assert p.functions == ()
    text = program_to_str(p)
    assert "t = mu * mu;" in text  # expression bodies are substituted
    assert "add_obs__1__y ~ normal(add_obs__1__m, 1);" in text
    assert program_to_str(inline_functions(parse(FUNCS))) == text


def test_inlined_program_matches_hand_expansion():
    # y ~ normal(mu^2, 1) plus y^2, evaluated directly
    from scipy import stats

    env = run_model(parse(FUNCS), {"y": 0.7}, {"mu": 1.3})
    assert env["target"] == pytest.approx(stats.norm(1.3**2, 1).logpdf(0.7) + 0.49, rel=1e-12)


def test_recursive_function_rejected():
    src = "functions { real f(real x) { return f(x); } } model { real a; a = f(1.0); }"
    with pytest.raises(CompileError) as exc:
        kernelize(parse(src))
    assert exc.value.primary.code == "unsupported-recursion"


def test_split_phases_shapes():
    ph = split_phases(parse(PHASED))
    assert ph.transformed_data.inputs == ("N", "y")
    assert ph.transformed_data.outputs == ("ybar", "s")
    assert [d.name for d in ph.model.decls("data")] == ["N", "y", "ybar", "s"]
    assert ph.generated_quantities.outputs == ("shifted", "twice")


def _split_target(program, data, params):
    ph = split_phases(program)
    extra = run_phase(ph.transformed_data, load_inputs(program.decls("data"), data))
    return run_model(ph.model, {**data, **extra}, params)["target"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_split_pipeline_preserves_target(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    data = {"N": n, "y": [float(v) for v in rng.normal(size=n)]}
    params = {"mu": float(rng.normal()), "tau": float(rng.uniform(0.1, 3))}
    p = parse(PHASED)
    expected = run_model(kernelize(p), data, params)["target"]
    assert _split_target(p, data, params) == pytest.approx(expected, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("name", sorted(PINS))
def test_split_pipeline_preserves_target_on_corpus(name):
    rng = np.random.default_rng(7)
    p = parse(source(name))
    for _ in range(10):
        data, params = PINS[name](rng)
        expected = run_model(kernelize(p), data, params)["target"]
        assert _split_target(p, data, params) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_allocation_schedule_groups_by_first_use():
    p = parse("model { real a; real b; real c; a = 1; b = a; }")
    sched = allocation_schedule(p.model.decls, p.model.body.stmts)
    assert [[d.name for d in g] for g, _ in sched] == [["a"], ["b"], ["c"]]
    assert sched[-1][1] is None
