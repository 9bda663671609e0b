"""The full compilation pipeline from Stan source to GProb."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .diagnostics import CompileError
from .frontend import ast as A
from .frontend import parse, validate_guide
from .gprob.translate import compile_guide, compile_phase, compile_program
from .normalize import Phases, kernelize, split_phases
from .shapes import AnnotatedProgram, resolve_program


@dataclass
class Compiled:
    """Every artifact produced from one source program."""

    program: A.Program
    kernel: A.Program
    annotated: AnnotatedProgram
    model: object  # GProb IR of the kernel
    guide: Optional[object]
    warnings: list

    @property
    def data_decls(self) -> tuple:
        return self.kernel.decls("data")

    @property
    def param_names(self) -> list:
        return [d.name for d in self.kernel.param_decls]


@dataclass
class PhasedIR:
    """Pre-processing, model and post-processing IR for emission."""

    phases: Phases
    transformed_data: object
    model: object
    generated_quantities: object
    guide: Optional[object]
    annotated: AnnotatedProgram


def front(source: str) -> A.Program:
    """Parse and check the surface restrictions (guide included)."""
    program = parse(source)
    diags = validate_guide(program)
    if diags:
        raise CompileError(diags)
    return program


def compile_source(source: str) -> Compiled:
    return compile_ast(front(source))


def compile_ast(program: A.Program) -> Compiled:
    kernel = kernelize(program)
    ann = resolve_program(kernel)
    return Compiled(program, kernel, ann, compile_program(ann), compile_guide(ann), list(ann.warnings))


def compile_phased(program: A.Program, ann_kernel: AnnotatedProgram) -> PhasedIR:
    """Split pre-/post-processing out of the model for emission.

    Phase locals take their types from the kernel annotation since names
    are unique program-wide.
    """
    phases = split_phases(program)
    ann = resolve_program(phases.model)
    return PhasedIR(
        phases,
        compile_phase(phases.transformed_data, ann_kernel),
        compile_program(ann),
        compile_phase(phases.generated_quantities, ann_kernel),
        compile_guide(ann),
        ann,
    )
