import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stan2gprob.compiler import compile_source
from stan2gprob.frontend import ast as A
from stan2gprob.frontend import parse
from stan2gprob.frontend.parser import parse_statement
from stan2gprob.gprob import compile_stmt, emit_gprob, lhs_vars
from stan2gprob.gprob.ir import (
    Factor,
    For,
    Let,
    Observe,
    Param,
    PTuple,
    PUnit,
    PVar,
    Return,
    Sample,
    TupleE,
    Unit,
    gwalk,
)
from stan2gprob.shapes import resolve_program

from conftest import PINS, random_programs, source

COIN_IR = """\
let z = sample(uniform(0, 1)) in
let () = observe(beta(1, 1), z) in
let () =
  for_{} (i in 1:N)
    let () = observe(bernoulli(z), x[i]) in
    return(())
in
return(z)
"""


def ir(text):
    return compile_source(text).model


def body_after_params(g):
    while isinstance(g, Let) and isinstance(g.value, Sample):
        g = g.body
    return g


class TestParameters:
    def test_two_sided_bound_is_uniform(self):
        g = ir("parameters { real<lower=0,upper=1> z; } model {}")
        assert g == Let(PVar("z"), Sample(A.Call("uniform", (A.Const(0), A.Const(1)))), Return(A.Var("z")))

    def test_unconstrained_is_improper_uniform(self):
        g = ir("parameters { real alpha0; } model {}")
        d = g.value.dist
        assert d.name == "improper_uniform" and d.args == (A.Const(-math.inf), A.Const(math.inf))
        assert g.body == Return(A.Var("alpha0"))

    def test_lower_bound_only(self):
        d = ir("parameters { real<lower=0> s; } model {}").value.dist
        assert d == A.Call("improper_uniform", (A.Const(0), A.Const(math.inf)))

    def test_array_parameter_carries_shape(self):
        g = ir("data { int N; } parameters { real a[N]; } model {}")
        assert emit_gprob(g).startswith("let a = sample(improper_uniform(-inf, inf), real[N]) in")


class TestTableRows:
    """Each feature row compiles to observe / observe / improper sample / factor."""

    def test_left_expression_is_observe(self):
        g = body_after_params(ir(source("left_expression")))
        assert isinstance(g.value, Observe)
        assert g.value.value == A.Call("sum", (A.Var("phi"),))
        assert emit_gprob(g.value).rstrip() == "observe(normal(0, 0.001 * N), sum(phi))"

    def test_multiple_updates_are_two_observes(self):
        g = body_after_params(ir(source("multiple_updates")))
        assert isinstance(g.value, Observe) and isinstance(g.body.value, Observe)
        assert [g.value.dist.args[1], g.body.value.dist.args[1]] == [A.Var("sigma_py"), A.Var("sigma_pt")]

    def test_implicit_prior_is_improper_sample(self):
        g = ir(source("implicit_prior"))
        assert g.pat == PVar("alpha0") and g.value.dist.name == "improper_uniform"
        assert not any(isinstance(n, Observe) and n.value == A.Var("alpha0") for n in gwalk(g))

    def test_target_update_is_factor(self):
        g = body_after_params(ir(source("target_update")))
        assert isinstance(g.value, Factor)
        assert emit_gprob(g.value).rstrip() == "factor(-0.5 * dot_self(phi[node1] - phi[node2]))"


class TestPrograms:
    def test_coin_golden(self):
        assert emit_gprob(ir(source("coin"))) == COIN_IR

    def test_empty_model(self):
        assert emit_gprob(ir("parameters { real x; } model {}")) == (
            "let x = sample(improper_uniform(-inf, inf)) in\nreturn(x)\n"
        )

    def test_skip_is_continuation(self):
        ann = resolve_program(parse("model { }"))
        k = Return(Unit())
        assert compile_stmt(A.Skip(), k, ann) == k

    def test_explicit_broadcast_on_vector_observe(self):
        g = ir(source("linear_regression"))
        assert "observe(normal(alpha + beta * x, rep_vector(sigma, N)), y)" in emit_gprob(g)

    def test_vae_broadcast_to_inferred_shape(self):
        text = emit_gprob(ir(source("vae")))
        assert "observe(normal(broadcast(0, {nz}), broadcast(1, {nz})), z)" in text

    def test_loop_state_is_assigned_variables(self):
        g = ir("parameters { real p; } model { real a; real b; a = 0; for (i in 1:3) { a = a + i; target += a; } b = a; }")
        loops = [n for n in gwalk(g) if isinstance(n, For)]
        assert [lp.state for lp in loops] == [("a",)]
        assert any(isinstance(n, Let) and n.pat == PTuple(("a",)) for n in gwalk(g))


class TestGuide:
    def test_multimodal_guide(self):
        c = compile_source(source("multimodal"))
        kinds = [type(n.value).__name__ for n in gwalk(c.guide) if isinstance(n, Let)]
        assert kinds[:5] == ["Param"] * 5
        first_sample = next(n for n in gwalk(c.guide) if isinstance(n, Let) and isinstance(n.value, Sample))
        assert first_sample.pat == PVar("cluster")
        assert emit_gprob(first_sample.value).rstrip() == "sample(normal(mc, 1))"

    def test_vae_guide_samples_z_after_encoder(self):
        text = emit_gprob(compile_source(source("vae")).guide)
        assert text.index("encoder(x)") < text.index("let z = sample(normal(mu_z, sigma_z))")
        assert text.rstrip().endswith("return(z)")

    def test_guide_without_parameters(self):
        c = compile_source("model {} guide {}")
        assert c.guide == Return(Unit())

    def test_guide_parameters_are_param_nodes(self):
        c = compile_source(source("mlp"))
        assert sum(isinstance(n, Param) for n in gwalk(c.guide)) == 8


class TestLhsVars:
    def test_assignments(self):
        assert set(lhs_vars(parse_statement("{ x = 1; y[i] = 2; }"))) == {"x", "y"}

    def test_target_update_assigns_nothing(self):
        assert lhs_vars(parse_statement("target += e;")) == ()

    def test_skip(self):
        assert lhs_vars(A.Skip()) == ()


def _sample_free(g):
    return not any(isinstance(n, Sample) for n in gwalk(g))


@pytest.mark.parametrize("name", sorted(PINS) + ["vae", "mlp"])
def test_parameter_prefix_then_sample_free_body(name):
    c = compile_source(source(name))
    names = c.param_names
    g = c.model
    for p in names:
        assert isinstance(g, Let) and g.pat == PVar(p) and isinstance(g.value, Sample)
        g = g.body
    assert _sample_free(g)
    returns = [n for n in gwalk(g) if isinstance(n, Return) and not isinstance(n.value, (Unit, TupleE))]
    returns += [n for n in gwalk(g) if isinstance(n, Return) and isinstance(n.value, TupleE) and n.value.items == tuple(A.Var(p) for p in names)]
    expected = A.Var(names[0]) if len(names) == 1 else TupleE(tuple(A.Var(p) for p in names))
    tails = list(_tails(g))
    assert tails and all(t == Return(expected) for t in tails)
    assert returns


def _tails(g):
    """Terminal expressions of the outer continuation (loops are not entered)."""
    if isinstance(g, Let):
        yield from _tails(g.body)
    elif hasattr(g, "then"):
        yield from _tails(g.then)
        yield from _tails(g.orelse)
    else:
        yield g


@settings(max_examples=100, deadline=None)
@given(random_programs)
def test_model_block_never_samples(src):
    c = compile_source(src)
    assert _sample_free(body_after_params(c.model))


@settings(max_examples=100, deadline=None)
@given(random_programs, st.data())
def test_sequence_compilation_is_compositional(src, data):
    ann = resolve_program(parse(src))
    stmts = ann.program.model.body.stmts
    cut = data.draw(st.integers(0, len(stmts)))
    s1, s2 = A.Seq(stmts[:cut]), A.Seq(stmts[cut:])
    k = Return(Unit())
    whole = compile_stmt(A.Seq(stmts), k, ann)
    assert whole == compile_stmt(s1, compile_stmt(s2, k, ann), ann)


def test_unit_pattern_for_stateless_loop():
    g = body_after_params(ir(source("coin")))
    loop = g.body
    assert loop.pat == PUnit() and isinstance(loop.value, For) and loop.value.state == ()
