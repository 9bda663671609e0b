"""Size and shape inference."""

from .checker import AnnotatedProgram, TildeInfo, match_arg, resolve_program, vectorize
from .registry import Registry, default_registry
from .types import type_str
from .unify import Unifier

__all__ = [
    "AnnotatedProgram",
    "Registry",
    "TildeInfo",
    "Unifier",
    "default_registry",
    "match_arg",
    "resolve_program",
    "type_str",
    "vectorize",
]
