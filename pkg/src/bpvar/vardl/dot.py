"""Graphviz DOT rendering of process models."""

from __future__ import annotations

from ..graph.model import ProcessModel


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def export_dot(model: ProcessModel) -> str:
    """Tasks are boxes, events circles, gateways diamonds labelled AND/XOR/OR."""
    lines = [f"digraph {_q(model.id)} {{", "  rankdir=LR;"]
    for n in model.nodes:
        if n.is_gateway:
            attrs = f"shape=diamond, label={_q(n.gateway_kind.upper())}"
        elif n.kind == "task":
            style = ", style=bold" if n.worklet else ""
            attrs = f"shape=box, label={_q(n.label)}{style}"
        else:
            width = ", peripheries=2" if n.kind == "end" else ""
            attrs = f"shape=circle, label={_q(n.label)}{width}"
        lines.append(f"  {_q(n.id)} [{attrs}];")
    for e in model.edges:
        guard = f" [label={_q(e.guard)}]" if e.guard is not None else ""
        lines.append(f"  {_q(e.source)} -> {_q(e.target)}{guard};")
    lines.append("}")
    return "\n".join(lines) + "\n"
