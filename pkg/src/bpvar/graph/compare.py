"""Model comparison: isomorphism with witness, and label-based diff/patch."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import networkx as nx
from networkx.algorithms.isomorphism import DiGraphMatcher

from ..errors import AmbiguousLabels
from .model import Edge, Node, ProcessModel, fresh_id


@dataclass(frozen=True)
class Isomorphism:
    found: bool
    mapping: Optional[dict] = None  # node id in a -> node id in b

    def __bool__(self):
        return self.found


def _to_nx(model: ProcessModel) -> nx.DiGraph:
    g = nx.DiGraph()
    for n in model.nodes:
        g.add_node(n.id, sig=n.signature())
    for e in model.edges:
        g.add_edge(e.source, e.target, guard=e.guard)
    return g


def isomorphic(a: ProcessModel, b: ProcessModel) -> Isomorphism:
    """Label/kind/attribute/guard-preserving bijection between ``a`` and ``b``."""
    if len(a.nodes) != len(b.nodes) or len(a.edges) != len(b.edges):
        return Isomorphism(False)
    if sorted(n.signature() for n in a.nodes) != sorted(n.signature() for n in b.nodes):
        return Isomorphism(False)
    matcher = DiGraphMatcher(
        _to_nx(a), _to_nx(b),
        node_match=lambda x, y: x["sig"] == y["sig"],
        edge_match=lambda x, y: x["guard"] == y["guard"],
    )
    for mapping in matcher.isomorphisms_iter():
        return Isomorphism(True, dict(sorted(mapping.items())))
    return Isomorphism(False)


# -- diff -------------------------------------------------------------------

@dataclass(frozen=True)
class Difference:
    kind: str  # node-added | node-removed | attribute-changed | edge-added | edge-removed
    label: str = ""
    attribute: str = ""
    old: Optional[str] = None
    new: Optional[str] = None
    target: str = ""  # edge target label
    guard: Optional[str] = None
    node: Optional[Node] = None  # payload for node-added

    def __str__(self):
        if self.kind.startswith("edge"):
            guard = f" [{self.guard}]" if self.guard else ""
            return f"{self.kind} {self.label!r} -> {self.target!r}{guard}"
        if self.kind == "attribute-changed":
            return f"{self.kind} {self.label}.{self.attribute}: {self.old!r} -> {self.new!r}"
        return f"{self.kind} {self.label!r}"


def _by_label(model: ProcessModel) -> dict:
    index = {}
    for n in model.nodes:
        if n.label in index:
            raise AmbiguousLabels(f"label {n.label!r} is not unique in {model.id!r}")
        index[n.label] = n
    return index


def _edge_keys(model: ProcessModel) -> set:
    label = {n.id: n.label for n in model.nodes}
    return {(label[e.source], label[e.target], e.guard) for e in model.edges}


def _shape(n: Node) -> tuple:
    return (n.kind, n.gateway_kind, n.role)


def diff(a: ProcessModel, b: ProcessModel) -> list:
    """Primitive differences turning ``a`` into ``b``, nodes matched by label."""
    la, lb = _by_label(a), _by_label(b)
    out = []
    for label in sorted(la.keys() - lb.keys()):
        out.append(Difference("node-removed", label))
    for label in sorted(la.keys() & lb.keys()):
        na, nb = la[label], lb[label]
        if _shape(na) != _shape(nb):
            out.append(Difference("node-removed", label))
            out.append(Difference("node-added", label, node=nb))
            continue
        for attr in sorted(na.attributes.keys() | nb.attributes.keys()):
            old, new = na.attributes.get(attr), nb.attributes.get(attr)
            if old != new:
                out.append(Difference("attribute-changed", label, attr, old, new))
    for label in sorted(lb.keys() - la.keys()):
        out.append(Difference("node-added", label, node=lb[label]))
    ea, eb = _edge_keys(a), _edge_keys(b)
    key = lambda t: (t[0], t[1], t[2] or "")
    for s, t, g in sorted(ea - eb, key=key):
        out.append(Difference("edge-removed", s, target=t, guard=g))
    for s, t, g in sorted(eb - ea, key=key):
        out.append(Difference("edge-added", s, target=t, guard=g))
    return out


def apply_diff(model: ProcessModel, differences) -> ProcessModel:
    """Patch ``model`` with the output of ``diff``."""
    nodes = {n.label: n for n in model.nodes}
    label_of = {n.id: n.label for n in model.nodes}
    edges = {(label_of[e.source], label_of[e.target], e.guard) for e in model.edges}
    for d in differences:
        if d.kind == "node-removed":
            del nodes[d.label]
        elif d.kind == "node-added":
            taken = {n.id for n in nodes.values()}
            nodes[d.label] = replace(d.node, id=fresh_id(taken, d.node.id))
        elif d.kind == "attribute-changed":
            attrs = dict(nodes[d.label].attributes)
            if d.new is None:
                attrs.pop(d.attribute, None)
            else:
                attrs[d.attribute] = d.new
            nodes[d.label] = replace(nodes[d.label], attributes=attrs)
        elif d.kind == "edge-removed":
            edges.discard((d.label, d.target, d.guard))
        elif d.kind == "edge-added":
            edges.add((d.label, d.target, d.guard))
    ids = {label: n.id for label, n in nodes.items()}
    return model.evolve(
        nodes=nodes.values(),
        edges=[Edge(ids[s], ids[t], g) for s, t, g in edges],
    )
