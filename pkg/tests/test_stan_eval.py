import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from stan2gprob.frontend import parse, parse_expression
from stan2gprob.frontend.parser import parse_statement
from stan2gprob.runtime.values import Dist, StanRuntimeError
from stan2gprob.stan_eval import eval_expr, eval_stmt, run_model

from conftest import PINS, random_inputs, random_programs, source


def stmt(text):
    return parse_statement(f"{{ {text} }}")


class TestExpressions:
    def test_one_based_indexing(self):
        assert eval_expr({"x": (2, 3, 5)}, parse_expression("x[2]")) == 3

    def test_distribution_constructor(self):
        assert eval_expr({}, parse_expression("normal(0,1)")) == Dist("normal", (0, 1))

    def test_indexed_literal(self):
        assert eval_expr({}, parse_expression("{1,2}[1] + 4")) == 5

    def test_out_of_bounds(self):
        with pytest.raises(StanRuntimeError) as exc:
            eval_expr({"x": (1, 2)}, parse_expression("x[3]"))
        assert exc.value.code == "index-out-of-bounds"

    def test_unknown_builtin(self):
        with pytest.raises(StanRuntimeError):
            eval_expr({}, parse_expression("frobnicate(1)"))

    def test_integer_division_truncates(self):
        assert eval_expr({}, parse_expression("-7 / 2")) == -3


class TestStatements:
    def test_target_updates_add(self):
        assert eval_stmt({}, stmt("target += 2; target += 3;"))["target"] == 5

    def test_standard_normal_at_zero(self):
        env = eval_stmt({"x": 0.0}, stmt("x ~ normal(0, 1);"))
        assert env["target"] == pytest.approx(stats.norm.logpdf(0.0), rel=1e-12)

    def test_empty_range_skips_body(self):
        env = eval_stmt({"a": 1}, stmt("for (i in 3:2) a = 99;"))
        assert env["a"] == 1

    def test_while_and_if(self):
        env = eval_stmt({"k": 0, "s": 0}, stmt("while (k < 4) { k = k + 1; if (k > 2) s = s + k; }"))
        assert (env["k"], env["s"]) == (4, 7)

    def test_indexed_assignment_is_functional(self):
        before = {"x": (1.0, 2.0)}
        after = eval_stmt(before, stmt("x[2] = 5;"))
        assert after["x"] == (1.0, 5.0) and before["x"] == (1.0, 2.0)

    def test_matrix_foreach_is_row_major(self):
        from stan2gprob.runtime.values import Matrix, RowVector

        m = Matrix([RowVector([1.0, 2.0]), RowVector([3.0, 4.0])])
        env = eval_stmt({"m": m, "acc": 0.0}, stmt("for (v in m) acc = 10 * acc + v;"))
        assert env["acc"] == 1234.0


class TestModels:
    def test_coin_small(self):
        env = run_model(parse(source("coin")), {"N": 2, "x": [1, 0]}, {"z": 0.5})
        oracle = stats.beta(1, 1).logpdf(0.5) + stats.bernoulli(0.5).logpmf(1) + stats.bernoulli(0.5).logpmf(0)
        assert env["target"] == pytest.approx(oracle, rel=1e-12)
        assert env["target"] == pytest.approx(-1.3862944, abs=1e-7)

    def test_coin_without_data(self):
        assert run_model(parse(source("coin")), {"N": 0, "x": []}, {"z": 0.3})["target"] == 0.0

    def test_double_normal_at_mean(self):
        env = run_model(parse(source("double_normal")), {}, {"theta": 1000.0})
        assert env["target"] == pytest.approx(2 * stats.norm.logpdf(0.0), rel=1e-12)

    def test_linear_regression_matches_direct_sum(self):
        rng = np.random.default_rng(3)
        x, y = rng.normal(size=5), rng.normal(size=5)
        env = run_model(
            parse(source("linear_regression")),
            {"N": 5, "x": x.tolist(), "y": y.tolist()},
            {"alpha": 0.3, "beta": -1.2, "sigma": 0.8},
        )
        oracle = stats.norm(0.3 - 1.2 * x, 0.8).logpdf(y).sum()
        assert env["target"] == pytest.approx(oracle, rel=1e-12)

    def test_target_update_model(self):
        data = {"N": 3, "E": 2, "node1": [1, 2], "node2": [2, 3]}
        phi = np.array([0.01, -0.02, 0.005])
        env = run_model(parse(source("target_update")), data, {"phi": phi.tolist()})
        d = phi[[0, 1]] - phi[[1, 2]]
        oracle = -0.5 * np.dot(d, d) + stats.norm(0, 0.003).logpdf(phi.sum())
        assert env["target"] == pytest.approx(oracle, rel=1e-12)

    def test_missing_parameter(self):
        with pytest.raises(StanRuntimeError) as exc:
            run_model(parse(source("double_normal")), {}, {})
        assert exc.value.code == "missing-input"


def _target(src, data, params, t=0.0):
    return run_model(parse(src), data, params, target=t)["target"]


@settings(max_examples=150, deadline=None)
@given(random_programs, random_inputs(), st.floats(-1e3, 1e3, allow_nan=False))
def test_target_shift_law(src, inputs, t):
    data, params = inputs
    base = _target(src, data, params)
    assert _target(src, data, params, t) == pytest.approx(t + base, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=0, max_size=6),
    st.floats(-2, 2, allow_nan=False),
    st.floats(0.1, 3),
)
def test_vectorized_tilde_equals_loop(xs, mu, sigma):
    env = {"x": tuple(xs), "n": len(xs), "mu": mu, "sigma": sigma}
    vec = eval_stmt(env, stmt("x ~ normal(mu, sigma);"))["target"]
    loop = eval_stmt(env, stmt("for (i in 1:n) x[i] ~ normal(mu, sigma);"))["target"]
    assert vec == pytest.approx(loop, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("name", sorted(PINS))
def test_evaluation_is_deterministic(name):
    rng = np.random.default_rng(11)
    p = parse(source(name))
    for _ in range(5):
        data, params = PINS[name](rng)
        a, b = run_model(p, data, params), run_model(p, data, params)
        assert a == b and math.copysign(1, a["target"]) == math.copysign(1, b["target"])
