"""``bpvar`` command-line interface.

Exit codes: 0 success, 1 validation or verdict failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional

from . import export
from .cepc import apply_configuration, validate_configuration
from .corpus import corpus_root, cross_check, fixture, load_manifest, run_fixture, run_matrix
from .errors import (BpvarError, DuplicateName, InvalidDeclaration, OptionFailed,
                     SkippedPair, UnresolvedReference)
from .graph.blocks import block_tree
from .graph.compare import diff, isomorphic
from .graph.traces import enumerate_traces
from .graph.validate import validate_structure
from .lexer import VarDLSyntaxError
from .pesoa import resolve, validate_selection
from .provop import derive_variant, partition_options, select_options
from .vardl import Document, export_dot, load_document, serialize_model
from .worklet import enumerate_cases, execute_case, replay_cornerstones

FORMATS = ("vardl", "dot", "structured")
_PARSE_ERRORS = (VarDLSyntaxError, UnresolvedReference, DuplicateName, InvalidDeclaration)


class UsageError(Exception):
    pass


class Failure(Exception):
    """Validation or verdict failure (exit 1)."""


def _load(path: str) -> Document:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{path}: no such file")
    return load_document(p)


def _pick(doc: Document, kind: str, name: Optional[str], path: str):
    """Named declaration of ``kind``; the only/first local one when unnamed."""
    if name:
        value = doc.find(kind, name)
        if value is None:
            raise UsageError(f"{path}: no {kind} named {name!r}")
        return value
    found = doc.local(kind) or doc.visible(kind)
    if not found:
        raise UsageError(f"{path}: no {kind} declaration")
    return found[0]


def _named_or_file(doc: Document, kind: str, ref: str, path: str):
    """``ref`` names a declaration in ``doc`` or is a file holding one."""
    value = doc.find(kind, ref)
    if value is not None:
        return value
    if Path(ref).is_file():
        return _pick(_load(ref), kind, None, ref)
    raise UsageError(f"{path}: no {kind} named {ref!r} and no such file")


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _render(model, fmt: str) -> str:
    if fmt == "dot":
        return export_dot(model)
    if fmt == "structured":
        return export.export_model(model)
    return serialize_model(model)


def _span_of(doc: Document, exc: BaseException) -> str:
    if not isinstance(exc, OptionFailed) and isinstance(exc.__cause__, OptionFailed):
        exc = exc.__cause__
    if isinstance(exc, OptionFailed):
        for d in doc.decls + doc.scope:
            if d.kind == "option" and d.name == exc.option:
                op = d.value.operations[exc.index]
                return f" [option declared at {d.span}, operation at {op.span}]"
    return ""


# -- verbs -------------------------------------------------------------------

def cmd_check(args) -> int:
    problems = 0
    for path in args.files:
        doc = _load(path)
        for model in doc.processes:
            for v in validate_structure(model):
                print(f"{path}: process {model.id}: {v}", file=sys.stderr)
                problems += 1
            try:
                block_tree(model)
            except BpvarError as exc:
                print(f"{path}: process {model.id}: {exc}", file=sys.stderr)
                problems += 1
        for tree in doc.local("rdr"):
            for entry in replay_cornerstones(tree):
                if not entry.ok:
                    print(f"{path}: rdr {tree.task!r}: rule {entry.node} concludes "
                          f"{entry.expected} but its cornerstone selects {entry.actual}",
                          file=sys.stderr)
                    problems += 1
        for cm in doc.local("cepc"):
            for cfg in doc.local("cepc-config"):
                for line in validate_configuration(cm, cfg).lines():
                    print(f"{path}: cepc-config {cfg.name}: {line}", file=sys.stderr)
                    problems += line.startswith("error")
        kinds = sorted({d.kind for d in doc.decls})
        print(f"{path}: {len(doc.decls)} declarations ({', '.join(kinds) or 'none'})")
    if problems:
        raise Failure(f"{problems} problem(s) found")
    return 0


def cmd_derive(args) -> int:
    doc = _load(args.base)
    options = doc.visible("option")
    if args.option:
        by_name = {o.name: o for o in options}
        unknown = [n for n in args.option if n not in by_name]
        if unknown:
            raise UsageError(f"{args.base}: unknown option(s) {', '.join(unknown)}")
        chosen = [by_name[n] for n in args.option]
    else:
        ctx = _named_or_file(doc, "context", args.context, args.base) if args.context else {}
        chosen = select_options(options, ctx)
    print(f"options: {', '.join(o.name for o in chosen) or '(none)'}", file=sys.stderr)
    try:
        model = derive_variant(doc.base, chosen)
    except BpvarError as exc:
        raise Failure(f"{args.base}: {exc}{_span_of(doc, exc)}") from exc
    _emit(_render(model, args.format), args.output)
    return 0


def cmd_configure(args) -> int:
    doc = _load(args.model)
    cm = _pick(doc, "cepc", args.cepc, args.model)
    cfg = _named_or_file(doc, "cepc-config", args.config, args.model)
    report = validate_configuration(cm, cfg)
    for line in report.lines():
        print(f"{args.model}: {line} [configuration at {cfg.span}]", file=sys.stderr)
    if not report.ok:
        raise Failure("configuration rejected")
    _emit(_render(apply_configuration(cm, cfg), args.format), args.output)
    return 0


def cmd_simulate(args) -> int:
    doc = _load(args.parent)
    data = _named_or_file(doc, "context", args.case, args.parent).values
    reps = doc.visible("repertoire")
    if not reps:
        raise UsageError(f"{args.parent}: no repertoire declaration")
    trees = doc.visible("rdr")
    runtime = partition_options(doc.visible("option"), data)[1]
    if args.exhaustive:
        result = enumerate_cases(doc.base, reps[0], trees, data, runtime_options=runtime)
        if args.format == "structured":
            text = export.export_traces(result.traces, result.overflow)
        else:
            text = "".join(" ; ".join(t) + "\n" for t in sorted(result.traces))
            text += f"# {len(result.traces)} traces from {result.runs} runs\n"
    else:
        log = execute_case(doc.base, reps[0], trees, data, args.seed, runtime)
        text = (export.export_case_log(log) if args.format == "structured"
                else "\n".join(log.lines()) + "\n")
    _emit(text, args.output)
    return 0


def cmd_resolve(args) -> int:
    doc = _load(args.model)
    sm = _pick(doc, "stereotypes", args.stereotypes, args.model)
    fm = _named_or_file(doc, "features", args.features, args.model) if args.features \
        else _pick(doc, "features", None, args.model)
    selection = [s for s in args.select.split(",") if s] if args.select else []
    if fm.root not in selection:
        selection.append(fm.root)
    violations = validate_selection(fm, selection)
    for rule, feats in violations:
        print(f"{args.model}: selection violates {rule}: {', '.join(feats)} "
              f"[feature model at {fm.span}]", file=sys.stderr)
    if violations:
        raise Failure("invalid feature selection")
    _emit(_render(resolve(sm, fm, selection), args.format), args.output)
    return 0


def cmd_corpus(args) -> int:
    root = Path(args.root) if args.root else corpus_root()
    if args.all or not args.case:
        report = run_matrix(root)
        for line in report.lines():
            print(line)
        if not report.ok:
            raise Failure("corpus mismatch")
        return 0
    manifest = load_manifest(root)["cases"]
    if args.case not in manifest:
        raise UsageError(f"unknown case {args.case!r}")
    variants = [args.variant] if args.variant else sorted(manifest[args.case]["goldens"])
    approaches = [args.approach] if args.approach else list(manifest[args.case]["approaches"])
    ok = True
    for variant in variants:
        for approach in approaches:
            try:
                verdict = run_fixture(fixture(args.case, approach, root), variant)
            except SkippedPair as sp:
                print(f"{args.case:<10} {approach:<8} {variant:<3} skipped: {sp.note}")
                continue
            except KeyError:
                continue
            print(verdict.line())
            for d in verdict.differences:
                print(f"    {d}")
            ok &= verdict.ok
        check = cross_check(args.case, variant, root)
        print(f"{args.case:<10} cross    {variant:<3} "
              f"{'equivalent' if check.equivalent else 'DIFFERENT'}")
        ok &= check.equivalent
    if not ok:
        raise Failure("corpus mismatch")
    return 0


def cmd_dot(args) -> int:
    doc = _load(args.file)
    model = _pick(doc, "process", args.process, args.file) if args.process else doc.base
    _emit(export_dot(model), args.output)
    return 0


def cmd_diff(args) -> int:
    a = _pick(_load(args.a), "process", args.process_a, args.a) if args.process_a \
        else _load(args.a).base
    b = _pick(_load(args.b), "process", args.process_b, args.b) if args.process_b \
        else _load(args.b).base
    same = bool(isomorphic(a, b))
    try:
        changes = diff(a, b)
    except BpvarError as exc:
        changes = []
        print(f"label diff unavailable: {exc}", file=sys.stderr)
    for d in changes:
        print(d)
    ta, tb = enumerate_traces(a).traces, enumerate_traces(b).traces
    print(f"isomorphic: {'yes' if same else 'no'}; "
          f"trace-equivalent: {'yes' if ta == tb else 'no'}")
    if not same:
        raise Failure("models differ")
    return 0


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bpvar", description="Derive and compare business process variants.")
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    def model_output(p):
        p.add_argument("--format", choices=FORMATS, default="vardl")
        p.add_argument("-o", "--output", help="write the model here instead of stdout")

    p = sub.add_parser("check", help="parse and validate VarDL files")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("derive", help="derive a variant from a base process and options")
    p.add_argument("--base", required=True, help="VarDL file with base process and options")
    p.add_argument("--context", help="context name in the base file, or a file with one")
    p.add_argument("--option", action="append", help="apply this option (repeatable, in order)")
    model_output(p)
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("configure-cepc", help="individualize a configurable model")
    p.add_argument("--model", required=True)
    p.add_argument("--config", required=True, help="configuration name or file")
    p.add_argument("--cepc", help="configurable model name when the file holds several")
    model_output(p)
    p.set_defaults(func=cmd_configure)

    p = sub.add_parser("simulate", help="run a case with worklet late binding")
    p.add_argument("--parent", required=True)
    p.add_argument("--case", required=True, help="case data: context name or file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exhaustive", action="store_true", help="enumerate all traces")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("resolve-pesoa", help="resolve stereotypes for a feature selection")
    p.add_argument("--model", required=True)
    p.add_argument("--features", help="feature model name or file")
    p.add_argument("--stereotypes", help="annotation set name when the file holds several")
    p.add_argument("--select", default="", help="comma-separated selected features")
    model_output(p)
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("corpus", help="run the case-study corpus against golden models")
    p.add_argument("--all", action="store_true")
    p.add_argument("--case")
    p.add_argument("--variant")
    p.add_argument("--approach")
    p.add_argument("--root", help="corpus directory (default: $BPVAR_CORPUS or bundled)")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("dot", help="render a process as Graphviz DOT")
    p.add_argument("file")
    p.add_argument("--process")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_dot)

    p = sub.add_parser("diff", help="compare two process models")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--process-a")
    p.add_argument("--process-b")
    p.set_defaults(func=cmd_diff)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"bpvar: {exc}", file=sys.stderr)
        return 2
    except _PARSE_ERRORS as exc:
        print(f"bpvar: {exc}", file=sys.stderr)
        return 2
    except Failure as exc:
        print(f"bpvar: {exc}", file=sys.stderr)
        return 1
    except BpvarError as exc:
        print(f"bpvar: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"bpvar: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
