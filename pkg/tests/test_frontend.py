import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stan2gprob.diagnostics import CompileError
from stan2gprob.frontend import ast as A
from stan2gprob.frontend import lex, parse, parse_expression, program_to_str, validate_guide
from stan2gprob.frontend.printer import expr_to_str

from conftest import source

CORPUS = [
    "coin",
    "double_normal",
    "linear_regression",
    "reparameterization",
    "multimodal",
    "vae",
    "mlp",
    "left_expression",
    "multiple_updates",
    "target_update",
    "implicit_prior",
]


def kinds(text):
    return [repr(t) for t in lex(text)]


def test_lex_target_update():
    assert kinds("target += 1;") == ["TARGET", "PLUSEQ", "INT(1)", "SEMI"]


def test_lex_tilde():
    assert kinds("x ~ normal(0,1);")[:4] == ["ID(x)", "TILDE", "ID(normal)", "LPAREN"]


def test_lex_star_shape():
    assert kinds("real z[*];") == ["REAL", "ID(z)", "LBRACK", "STAR", "RBRACK", "SEMI"]


def test_lex_strips_comments():
    assert kinds("// a\n/* b */ # c\nx") == ["ID(x)"]


def test_lex_unterminated_comment():
    with pytest.raises(CompileError) as exc:
        lex("model { /* never closed }")
    assert exc.value.primary.span.line == 1


def test_parse_coin():
    p = parse(source("coin"))
    n, x = p.decls("data")
    assert (n.name, n.base.kind, n.dims) == ("N", "int", None)
    assert x.name == "x" and x.dims == (A.Var("N"),)
    assert x.constraint == A.Constraint(A.Const(0), A.Const(1))
    (z,) = p.param_decls
    assert z.constraint == A.Constraint(A.Const(0), A.Const(1))
    tilde, loop = p.model.body.stmts
    assert isinstance(tilde, A.Tilde) and tilde.dist == "beta"
    assert isinstance(loop, A.ForRange) and isinstance(loop.body, A.Tilde)


def test_parse_minimal_program():
    p = parse("model {}")
    assert p.model.body.stmts == () and p.data is None


def test_parse_vae_extensions():
    p = parse(source("vae"))
    assert [n.cls for n in p.networks] == ["Decoder", "Encoder"]
    assert isinstance(p.param_decls[0].dims, A.Star)
    mu = p.model.decls[0]
    assert mu.dims == (A.Wild(), A.Wild())
    assert p.guide is not None


def test_operators_desugar_to_calls():
    assert parse_expression("a + b * c") == A.Call("add", (A.Var("a"), A.Call("multiply", (A.Var("b"), A.Var("c")))))
    assert parse_expression("-x") == A.Call("minus", (A.Var("x"),))


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_round_trip(name):
    p = parse(source(name))
    assert parse(program_to_str(p)) == p


@pytest.mark.parametrize(
    "text, code",
    [
        ("data { int N; }", "missing-model"),
        ("model {} data { int N; }", "block-order"),
        ("data { int N; } data { int M; } model {}", "duplicate-block"),
        ("data { int N; } parameters { real N; } model {}", "duplicate-name"),
        ("model { x = 1; }", "undeclared-name"),
        ("data { int N; } model { N = 2; }", "readonly-assignment"),
        ("data { real x[_]; } model {}", "wildcard-in-data"),
        ('model { print("hi"); }', "unsupported-feature"),
        ("model { target += 1 }", "syntax-error"),
    ],
)
def test_rejections_have_one_primary_diagnostic(text, code):
    with pytest.raises(CompileError) as exc:
        parse(text)
    errors = [d for d in exc.value.diagnostics if d.severity == "error"]
    assert len(errors) == 1
    assert errors[0].code == code


def test_guide_of_vae_is_valid():
    assert validate_guide(parse(source("vae"))) == []


def test_guide_missing_parameter():
    p = parse("parameters { real theta; real mu; } model {} guide { mu ~ normal(0, 1); }")
    assert [str(d) for d in validate_guide(p)] == ["guide-missing-parameter: theta"]


def test_guide_target_update():
    p = parse("parameters { real mu; } model {} guide { mu ~ normal(0, 1); target += 1; }")
    assert [d.code for d in validate_guide(p)] == ["guide-target-update"]


def test_guide_nongenerative():
    p = parse("data { real y; } parameters { real mu; } model {} guide { mu ~ normal(0, 1); y ~ normal(mu, 1); }")
    assert [d.code for d in validate_guide(p)] == ["guide-nongenerative"]


# expression round trip on generated trees

_names = st.sampled_from(["a", "b", "x1", "N"])
_leaves = st.one_of(
    _names.map(A.Var),
    st.integers(0, 1000).map(A.Const),
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(A.Const),
)


def _grow(children):
    binop = st.tuples(st.sampled_from(sorted(A.BINARY_OPS.values())), children, children).map(
        lambda t: A.Call(t[0], (t[1], t[2]))
    )
    unop = st.tuples(st.sampled_from(["minus", "logical_neg"]), children).map(lambda t: A.Call(t[0], (t[1],)))
    call = st.tuples(st.sampled_from(["exp", "log", "normal"]), st.lists(children, min_size=1, max_size=3)).map(
        lambda t: A.Call(t[0], tuple(t[1]))
    )
    index = st.tuples(_names.map(A.Var), st.lists(children, min_size=1, max_size=2)).map(
        lambda t: A.Index(t[0], tuple(t[1]))
    )
    arr = st.lists(children, min_size=1, max_size=3).map(lambda xs: A.ArrayLit(tuple(xs)))
    return st.one_of(binop, unop, call, index, arr)


expressions = st.recursive(_leaves, _grow, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(expressions)
def test_expression_print_parse_round_trip(e):
    assert parse_expression(expr_to_str(e)) == e
