"""Canonical VarDL text for documents and single declarations."""

from __future__ import annotations

import re

from ..graph.model import Node, ProcessModel
from ..lexer import quote
from ..rules import format_expr
from ..worklet import EMPTY_WORKLET
from .document import Document

HEADER = "# VarDL document (canonical form)\n"
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_INDENT = "  "
_KIND_ORDER = {"start": 0, "event": 1, "task": 2, "gateway": 3, "end": 4}


def _key(text: str) -> str:
    return text if _IDENT.match(text) else quote(text)


def _mapping(values) -> str:
    return "{" + ", ".join(f"{_key(k)}: {quote(v)}" for k, v in sorted(values.items())) + "}"


def _node_suffix(node: Node, with_label: bool = True) -> str:
    out = ""
    if with_label and node.label != node.id:
        out += f" {quote(node.label)}"
    if node.attributes:
        out += f" attrs {_mapping(node.attributes)}"
    if node.role:
        out += f" role {node.role}"
    return out


def process_lines(model: ProcessModel) -> list:
    lines = [f"process {model.id} {{"]
    for k, v in model.metadata.items():
        lines.append(f"{_INDENT}meta {k} = {quote(v)};")
    for n in sorted(model.nodes, key=lambda n: (_KIND_ORDER.get(n.kind, 9), n.id)):
        head = "worklet task" if n.worklet else n.kind
        gk = f" {n.gateway_kind}" if n.gateway_kind else ""
        lines.append(f"{_INDENT}{head} {n.id}{gk}{_node_suffix(n)};")
    for e in model.edges:
        guard = f" {quote(e.guard)}" if e.guard is not None else ""
        lines.append(f"{_INDENT}{e.source} -> {e.target}{guard};")
    lines.append("}")
    return lines


def _operation(op) -> str:
    between = f"between {quote(op.after)} and {quote(op.before)}"
    if op.kind == "insert":
        if isinstance(op.fragment, Node):
            node = op.fragment
            return f"INSERT task {quote(node.label)}{_node_suffix(node, False)} {between};"
        return f"INSERT process {op.fragment.id} {between};"
    if op.kind == "delete":
        return f"DELETE {quote(op.target)};"
    if op.kind == "move":
        return f"MOVE {quote(op.target)} {between};"
    return f"MODIFY {quote(op.target)}.{op.attribute} = {quote(op.value)};"


def _option(opt) -> list:
    head = f"option {opt.name}"
    if opt.rule is not None:
        head += f" rule {format_expr(opt.rule)}"
    if opt.resolution != "design":
        head += f" at {opt.resolution}"
    return [head + " {"] + [_INDENT + _operation(op) for op in opt.operations] + ["}"]


def _context(ctx) -> list:
    return ([f"context {ctx.name} {{"]
            + [f"{_INDENT}{k} = {quote(v)};" for k, v in ctx.values.items()] + ["}"])


def _cepc(cm) -> list:
    lines = [f"cepc {cm.name} for {cm.base.id} {{"]
    lines += [f"{_INDENT}configurable function {quote(f)};" for f in cm.functions]
    for ref, allowed in cm.connectors.items():
        lines.append(f"{_INDENT}configurable connector {quote(ref)} "
                     f"allow {{{', '.join(allowed)}}};")
    lines += [f"{_INDENT}requirement {format_expr(r)};" for r in cm.requirements]
    lines += [f"{_INDENT}guideline {format_expr(g)};" for g in cm.guidelines]
    return lines + ["}"]


def _cepc_config(cfg) -> list:
    return ([f"cepc-config {cfg.name} {{"]
            + [f"{_INDENT}{quote(k)} = {v};" for k, v in cfg.decisions.items()] + ["}"])


def _rdr(tree) -> list:
    lines = [f"rdr for {quote(tree.task)} {{"]
    root = tree.root
    head = "root" if root.id == "root" else f"root {root.id}"
    corner = f" cornerstone {_mapping(root.cornerstone)}" if root.cornerstone is not None else ""
    lines.append(f"{_INDENT}{head} -> {root.conclusion}{corner};")

    def visit(node):
        for side in ("true", "false"):
            child = getattr(node, f"{side}_child")
            if child is None:
                continue
            corner = (f" cornerstone {_mapping(child.cornerstone)}"
                      if child.cornerstone is not None else "")
            lines.append(f"{_INDENT}node {child.id} if {format_expr(child.condition)} -> "
                         f"{child.conclusion}{corner} at {node.id}.{side};")
            visit(child)

    visit(root)
    return lines + ["}"]


def _repertoire(rep) -> list:
    lines = [f"repertoire {rep.name} {{"]
    for name, model in rep.entries.items():
        target = "EMPTY" if model == EMPTY_WORKLET else f"process {model.id}"
        lines.append(f"{_INDENT}{name} = {target};")
    return lines + ["}"]


def _features(fm) -> list:
    lines = [f"features {fm.name} {{", f"{_INDENT}root {fm.root};"]
    for g in fm.groups:
        lines.append(f"{_INDENT}{g.parent} {g.kind} {{{', '.join(g.children)}}};")
    lines += [f"{_INDENT}requires {a} {b};" for a, b in fm.requires]
    lines += [f"{_INDENT}excludes {a} {b};" for a, b in fm.excludes]
    return lines + ["}"]


def _stereotypes(sm) -> list:
    lines = [f"stereotypes {sm.name} for {sm.base.id} {{"]
    for key, rec in sorted(sm.annotations.items()):
        if rec.kind in ("variant", "default"):
            continue
        extra = f" ({', '.join(rec.attributes)})" if rec.kind == "parameterized" else ""
        lines.append(f"{_INDENT}{rec.kind} {quote(key)}{extra};")
        if rec.kind == "varpoint":
            for name, is_default in sm.variants_of(key):
                flag = " default" if is_default else ""
                lines.append(f"{_INDENT}variant {name} of {quote(key)}{flag};")
    for feature, binds in sorted(sm.bindings.items()):
        lines.append(f"{_INDENT}bind {feature} {{")
        for b in binds:
            if b.action == "param":
                text = f"{quote(b.target)}.{b.attribute} = {quote(b.value)}"
            elif b.action == "variant":
                text = f"{quote(b.target)} -> {b.value}"
            else:
                text = f"{quote(b.target)} -> {b.action.upper()}"
            lines.append(f"{_INDENT * 2}{text};")
        lines.append(f"{_INDENT}}}")
    return lines + ["}"]


_WRITERS = {
    "process": process_lines, "option": _option, "context": _context, "cepc": _cepc,
    "cepc-config": _cepc_config, "rdr": _rdr, "repertoire": _repertoire,
    "features": _features, "stereotypes": _stereotypes,
}


def serialize(doc: Document) -> str:
    head = [f"import {quote(p)};" for p in doc.imports]
    if doc.base_name is not None:
        head.append(f"base {doc.base_name};")
    blocks = [head] if head else []
    blocks += [_WRITERS[d.kind](d.value) for d in doc.decls]
    body = "\n\n".join("\n".join(b) for b in blocks)
    return HEADER + (body + "\n" if body else "")


def serialize_model(model: ProcessModel) -> str:
    return HEADER + "\n".join(process_lines(model)) + "\n"
