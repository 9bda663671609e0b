"""GProb IR, its text form, the translation from Stan and Pyro emission."""

from .ir import observe_to_factor
from .pyro import emit_pyro
from .text import emit_gprob, parse_gprob
from .translate import compile_guide, compile_params, compile_program, compile_stmt, lhs_vars

__all__ = [
    "compile_guide",
    "compile_params",
    "compile_program",
    "compile_stmt",
    "emit_gprob",
    "emit_pyro",
    "lhs_vars",
    "observe_to_factor",
    "parse_gprob",
]
