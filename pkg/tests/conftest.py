import json
from pathlib import Path
from importlib.resources import files

import pytest

from stan2gprob.compiler import compile_source
from stan2gprob.stan_eval import load_inputs

CORPUS = files("stan2gprob") / "corpus"
GOLDEN_DIR = Path(__file__).parent / "golden"


def source(name: str) -> str:
    return (CORPUS / f"{name}.stan").read_text()


def data_file(name: str) -> dict:
    return json.loads((CORPUS / f"{name}.json").read_text())


@pytest.fixture(scope="session")
def compiled():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = compile_source(source(name))
        return cache[name]

    return get


def load_data(c, raw):
    return load_inputs(c.data_decls, raw)


# Random data/parameter pins for the oracle-equivalence corpus.


def _normals(rng, k, loc=0.0, scale=1.0):
    return [float(v) for v in rng.normal(loc, scale, k)]


def _coin(rng):
    n = int(rng.integers(0, 9))
    return {"N": n, "x": [int(b) for b in rng.integers(0, 2, n)]}, {"z": float(rng.uniform(0.01, 0.99))}


def _double_normal(rng):
    return {}, {"theta": float(rng.normal(1000, 3))}


def _linear_regression(rng):
    n = int(rng.integers(0, 7))
    data = {"N": n, "x": _normals(rng, n), "y": _normals(rng, n, 1.0, 2.0)}
    params = {"alpha": float(rng.normal()), "beta": float(rng.normal()), "sigma": float(rng.uniform(0.1, 3.0))}
    return data, params


def _reparameterization(rng):
    return {}, {"y_std": float(rng.normal()), "x_std": float(rng.normal())}


def _multimodal(rng):
    return {}, {"cluster": float(rng.normal(0, 2)), "theta": float(rng.normal(10, 10))}


def _left_expression(rng):
    n = int(rng.integers(1, 6))
    return {"N": n}, {"phi": _normals(rng, n, 0.0, 0.01)}


def _multiple_updates(rng):
    data = {"sigma_py": float(rng.uniform(0.1, 3.0)), "sigma_pt": float(rng.uniform(0.1, 3.0))}
    return data, {"phi_y": float(rng.normal())}


def _target_update(rng):
    n, e = int(rng.integers(2, 6)), int(rng.integers(1, 7))
    data = {
        "N": n,
        "E": e,
        "node1": [int(v) for v in rng.integers(1, n + 1, e)],
        "node2": [int(v) for v in rng.integers(1, n + 1, e)],
    }
    return data, {"phi": _normals(rng, n, 0.0, 0.01)}


PINS = {
    "coin": _coin,
    "double_normal": _double_normal,
    "linear_regression": _linear_regression,
    "reparameterization": _reparameterization,
    "multimodal": _multimodal,
    "left_expression": _left_expression,
    "multiple_updates": _multiple_updates,
    "target_update": _target_update,
}


# Random well-typed programs over a fixed declaration prelude.

from hypothesis import strategies as st  # noqa: E402

PRELUDE = """data { int n; real d[n]; }
parameters { real p; real<lower=0> s; }
model {
  real a;
  real b;
  int k1;
  int k2;
  a = 0.5;
  b = -1;
"""


def _exprs(loop_vars):
    leaves = ["a", "b", "p", "s", "0.5", "2", "-1.5"] + [f"d[{i}]" for i in loop_vars]
    base = st.sampled_from(leaves)
    return st.recursive(
        base,
        lambda c: st.one_of(
            st.tuples(c, st.sampled_from(["+", "-", "*"]), c).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            c.map(lambda x: f"exp(-({x}) * ({x}))"),
        ),
        max_leaves=4,
    )


def _stmts(depth, loop_vars):
    e = _exprs(loop_vars)
    simple = st.one_of(
        st.tuples(st.sampled_from(["a", "b"]), e).map(lambda t: f"{t[0]} = {t[1]};"),
        e.map(lambda x: f"target += {x};"),
        e.map(lambda x: f"p ~ normal({x}, s + 1);"),
        st.tuples(e, e).map(lambda t: f"{t[0]} ~ normal({t[1]}, 2);"),
        e.map(lambda x: f"d ~ normal({x}, s + 0.5);"),
    )
    if depth == 0:
        return simple
    inner = st.lists(_stmts(depth - 1, loop_vars), min_size=1, max_size=3).map(" ".join)
    var = f"i{depth}"
    loop_body = st.lists(_stmts(depth - 1, loop_vars + [var]), min_size=1, max_size=3).map(" ".join)
    counter = f"k{depth}"
    return st.one_of(
        simple,
        loop_body.map(lambda b: f"for ({var} in 1:n) {{ {b} }}"),
        st.tuples(e, inner, inner).map(lambda t: f"if ({t[0]} > 0) {{ {t[1]} }} else {{ {t[2]} }}"),
        inner.map(lambda b: f"{counter} = 0; while ({counter} < 2) {{ {counter} = {counter} + 1; {b} }}"),
    )


random_programs = st.lists(_stmts(2, []), min_size=1, max_size=5).map(lambda ss: PRELUDE + "  " + "\n  ".join(ss) + "\n}\n")


@st.composite
def random_inputs(draw):
    n = draw(st.integers(0, 3))
    finite = st.floats(-3, 3, allow_nan=False)
    data = {"n": n, "d": [draw(finite) for _ in range(n)]}
    params = {"p": draw(finite), "s": draw(st.floats(0.1, 3))}
    return data, params


# Acceptance reporting: one line per criterion in the terminal summary.

import time  # noqa: E402

ACCEPTANCE: dict = {}
_SESSION_START = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, title, seconds, budget, detail = ACCEPTANCE[num]
        status = "PASS" if ok else "FAIL"
        limit = f" (budget {budget:g}s)" if budget else ""
        terminalreporter.write_line(f"[{status}] criterion {num}: {title} in {seconds:.2f}s{limit}{detail}")
    total = time.perf_counter() - _SESSION_START
    status = "PASS" if total < 120 else "FAIL"
    terminalreporter.write_line(f"[{status}] full suite wall time {total:.1f}s (budget 120s)")
