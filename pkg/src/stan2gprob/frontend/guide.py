"""Static restrictions on the ``guide`` block.

A guide has to be directly samplable over exactly the model's parameter
space: every parameter is drawn once on every execution path, nothing
updates ``target``, and every tilde draws a parameter.
"""

from __future__ import annotations

from ..diagnostics import Diagnostic
from . import ast as A


def validate_guide(program: A.Program) -> list[Diagnostic]:
    if program.guide is None:
        return []
    params = [d.name for d in program.param_decls]
    diags: list[Diagnostic] = []
    sampled = _sampled(program.guide.body, set(params), frozenset(), False, diags)
    for name in params:
        if name not in sampled:
            diags.append(Diagnostic("guide-missing-parameter", name, program.guide.body.span))
    return diags


def _sampled(s, params: set, before: frozenset, in_loop: bool, diags: list) -> frozenset:
    """Parameters sampled on every path through ``s``, given ``before``."""
    if isinstance(s, A.Seq):
        acc = before
        for x in s.stmts:
            acc = _sampled(x, params, acc, in_loop, diags)
        return acc
    if isinstance(s, A.TargetPlusEq):
        diags.append(Diagnostic("guide-target-update", "the guide may not update target", s.span))
        return before
    if isinstance(s, A.Tilde):
        lhs = s.lhs
        if not (isinstance(lhs, A.Var) and lhs.name in params):
            diags.append(
                Diagnostic("guide-nongenerative", "the left side of a guide tilde must be a model parameter", s.span)
            )
            return before
        if in_loop:
            diags.append(
                Diagnostic("guide-nongenerative", f"'{lhs.name}' is sampled inside a loop", s.span)
            )
            return before
        if lhs.name in before:
            diags.append(Diagnostic("guide-nongenerative", f"'{lhs.name}' is sampled twice", s.span))
            return before
        return before | {lhs.name}
    if isinstance(s, A.If):
        a = _sampled(s.then, params, before, in_loop, diags)
        b = _sampled(s.orelse, params, before, in_loop, diags)
        return a & b
    if isinstance(s, (A.ForRange, A.ForEach, A.While)):
        _sampled(s.body, params, before, True, diags)
        return before
    return before
