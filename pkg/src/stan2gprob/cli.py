"""Command-line driver: check, compile, eval-target and infer."""

from __future__ import annotations

import argparse
import json
import sys

from .compiler import compile_phased, compile_source
from .diagnostics import CompileError, Diagnostic
from .frontend import program_to_str
from .gprob import emit_gprob, emit_pyro
from .runtime.inference import infer
from .runtime.values import StanRuntimeError
from .stan_eval import load_inputs, run_model


class _Usage(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stan2gprob", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="parse and type-check a program")
    c.add_argument("file")

    c = sub.add_parser("compile", help="compile and print one artifact")
    c.add_argument("file")
    emit = c.add_mutually_exclusive_group()
    emit.add_argument("--emit-ir", dest="emit", action="store_const", const="ir", help="canonical GProb text (default)")
    emit.add_argument("--emit-pyro", dest="emit", action="store_const", const="pyro", help="Pyro-flavored source")
    emit.add_argument("--emit-kernel", dest="emit", action="store_const", const="kernel", help="kernelized Stan program")
    emit.add_argument("--emit-types", dest="emit", action="store_const", const="types", help="resolved declaration types")
    c.add_argument("-o", "--output", help="write to this file instead of stdout")

    c = sub.add_parser("eval-target", help="evaluate target for fixed data and parameters")
    c.add_argument("file")
    c.add_argument("--data", help="JSON data file")
    c.add_argument("--params", required=True, help="JSON parameter values")

    c = sub.add_parser("infer", help="posterior summaries by importance sampling or Metropolis")
    c.add_argument("file")
    c.add_argument("--data", help="JSON data file")
    c.add_argument("--method", choices=("is", "mh"), default="is")
    c.add_argument("--samples", type=int, default=10000)
    c.add_argument("--warmup", type=int, help="default: 10%% of --samples (mh only)")
    c.add_argument("--thin", type=int, default=10, help="keep every T-th draw (mh only)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--step", type=float, default=0.5, help="random-walk proposal scale (mh only)")
    c.add_argument("--init", help="JSON initial parameter values (mh only)")
    c.add_argument("--chains", type=int, default=1)
    return p


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as exc:
        raise _Usage(f"cannot read {path}: {exc.strerror}") from None


def _json(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise _Usage(f"{path}: invalid JSON ({exc.msg})") from None


def _write(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as f:
            f.write(text)


def _report(diags, filename: str) -> None:
    for d in diags:
        print(d.format(filename), file=sys.stderr)


def _run(args) -> int:
    compiled = compile_source(_read(args.file))
    _report(compiled.warnings, args.file)
    if args.command == "check":
        return 0
    if args.command == "compile":
        emit = args.emit or "ir"
        if emit == "ir":
            text = emit_gprob(compiled.model)
            if compiled.guide is not None:
                text += "\n// guide\n" + emit_gprob(compiled.guide)
        elif emit == "pyro":
            text = emit_pyro(compile_phased(compiled.program, compiled.annotated), compiled.program)
        elif emit == "kernel":
            text = program_to_str(compiled.kernel)
        else:
            text = "\n".join(compiled.annotated.type_lines()) + "\n"
        _write(text, args.output)
        return 0
    data = load_inputs(compiled.data_decls, _json(args.data))
    if args.command == "eval-target":
        env = run_model(compiled.kernel, data, _json(args.params))
        print(f"{env['target']:.17g}")
        return 0
    init = None
    if args.init:
        raw = _json(args.init)
        decls = [d for d in compiled.kernel.param_decls if d.name in raw]
        init = load_inputs(decls, raw, data, check=False)
    opts = {"samples": args.samples, "warmup": args.warmup, "thin": args.thin, "step": args.step, "init": init}
    result = infer(args.method, compiled.model, data, opts, seed=args.seed, chains=args.chains)
    print(json.dumps(result, indent=2))
    return 0


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except _Usage as exc:
        print(f"stan2gprob: error: {exc}", file=sys.stderr)
        return 2
    except CompileError as exc:
        _report(exc.diagnostics, args.file)
        return 1
    except StanRuntimeError as exc:
        _report([Diagnostic(exc.code, exc.message)], args.file)
        return 1


if __name__ == "__main__":
    sys.exit(main())
