"""Structural well-formedness checks for process models."""

from __future__ import annotations

from dataclasses import dataclass

from .model import GATEWAY_KINDS, NODE_KINDS, ProcessModel


@dataclass(frozen=True, order=True)
class Violation:
    element: str  # node id, or "src->dst" for edges, or "" for model-level rules
    rule: str
    detail: str = ""

    def __str__(self):
        where = self.element or "<model>"
        return f"{where}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


def _reachable(adj: dict, roots) -> set:
    seen = set()
    stack = list(roots)
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        stack.extend(adj.get(cur, ()))
    return seen


def validate_structure(model: ProcessModel) -> list:
    """Return the sorted list of invariant violations (empty when valid)."""
    out = []
    ids = [n.id for n in model.nodes]
    known = set(ids)
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        out.append(Violation(dup, "duplicate-id"))

    pairs = {}
    for e in model.edges:
        name = f"{e.source}->{e.target}"
        if e.source not in known:
            out.append(Violation(name, "dangling-source", e.source))
        if e.target not in known:
            out.append(Violation(name, "dangling-target", e.target))
        if e.source == e.target:
            out.append(Violation(name, "self-loop"))
        pairs[(e.source, e.target)] = pairs.get((e.source, e.target), 0) + 1
    for (s, t), count in pairs.items():
        if count > 1:
            out.append(Violation(f"{s}->{t}", "parallel-edge"))

    starts = model.start_nodes
    if len(starts) != 1:
        out.append(Violation("", "start-count", str(len(starts))))
    if not model.end_nodes:
        out.append(Violation("", "end-count", "0"))

    for n in model.nodes:
        if n.kind not in NODE_KINDS:
            out.append(Violation(n.id, "unknown-kind", n.kind))
            continue
        if (n.gateway_kind is not None) != (n.kind == "gateway"):
            out.append(Violation(n.id, "gateway-kind"))
        elif n.kind == "gateway" and n.gateway_kind not in GATEWAY_KINDS:
            out.append(Violation(n.id, "gateway-kind", str(n.gateway_kind)))
        if any(not k for k in n.attributes):
            out.append(Violation(n.id, "empty-attribute-name"))
        # dangling edges are reported once above, not again as fan violations
        fan_in = sum(1 for e in model.in_edges(n.id) if e.source in known)
        fan_out = sum(1 for e in model.out_edges(n.id) if e.target in known)
        if n.kind == "gateway":
            if (fan_in > 1) == (fan_out > 1):
                out.append(Violation(n.id, "gateway-fan", f"in={fan_in} out={fan_out}"))
            elif fan_in == 0 or fan_out == 0:
                out.append(Violation(n.id, "gateway-fan", f"in={fan_in} out={fan_out}"))
        else:
            if fan_in > 1 or fan_out > 1:
                out.append(Violation(n.id, "node-fan", f"in={fan_in} out={fan_out}"))
            if n.kind == "start" and fan_in:
                out.append(Violation(n.id, "start-incoming"))
            if n.kind == "end" and fan_out:
                out.append(Violation(n.id, "end-outgoing"))

    fwd, back = {}, {}
    for e in model.edges:
        fwd.setdefault(e.source, []).append(e.target)
        back.setdefault(e.target, []).append(e.source)
    from_start = _reachable(fwd, [n.id for n in starts])
    to_end = _reachable(back, [n.id for n in model.end_nodes])
    for n in model.nodes:
        if n.id not in from_start or n.id not in to_end:
            out.append(Violation(n.id, "orphan"))

    return sorted(set(out), key=lambda v: (v.element, v.rule, v.detail))
