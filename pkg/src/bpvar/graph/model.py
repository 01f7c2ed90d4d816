"""Attributed process graph shared by all variability engines."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, Optional

NODE_KINDS = ("start", "end", "task", "event", "gateway")
GATEWAY_KINDS = ("and", "xor", "or")

Trace = tuple  # tuple[str, ...] of task labels


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    label: str = ""
    gateway_kind: Optional[str] = None
    role: Optional[str] = None
    attributes: Mapping[str, str] = field(default_factory=dict)
    # marks a placeholder task whose behaviour is bound late by a worklet
    worklet: bool = False
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.label:
            object.__setattr__(self, "label", self.id)
        object.__setattr__(self, "attributes", dict(sorted(self.attributes.items())))

    @property
    def is_gateway(self) -> bool:
        return self.kind == "gateway"

    def signature(self) -> tuple:
        """Everything isomorphism must preserve."""
        return (self.kind, self.label, self.gateway_kind, self.role,
                tuple(self.attributes.items()))


@dataclass(frozen=True, order=True)
class Edge:
    source: str
    target: str
    guard: Optional[str] = None
    span: object = field(default=None, compare=False, repr=False)

    def __hash__(self):
        return hash((self.source, self.target, self.guard))


@dataclass(frozen=True)
class ProcessModel:
    id: str
    nodes: tuple = ()
    edges: tuple = ()
    metadata: Mapping[str, str] = field(default_factory=dict)
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.id)))
        object.__setattr__(self, "edges", tuple(sorted(
            self.edges, key=lambda e: (e.source, e.target, e.guard or ""))))
        object.__setattr__(self, "metadata", dict(sorted(self.metadata.items())))

    # -- lookups ------------------------------------------------------------

    @cached_property
    def node_map(self) -> dict:
        return {n.id: n for n in self.nodes}

    @cached_property
    def _out(self) -> dict:
        out: dict = {n.id: [] for n in self.nodes}
        for e in self.edges:
            out.setdefault(e.source, []).append(e)
        return out

    @cached_property
    def _in(self) -> dict:
        inc: dict = {n.id: [] for n in self.nodes}
        for e in self.edges:
            inc.setdefault(e.target, []).append(e)
        return inc

    def node(self, node_id: str) -> Node:
        return self.node_map[node_id]

    def out_edges(self, node_id: str) -> list:
        return self._out.get(node_id, [])

    def in_edges(self, node_id: str) -> list:
        return self._in.get(node_id, [])

    def successors(self, node_id: str) -> list:
        return [e.target for e in self.out_edges(node_id)]

    def predecessors(self, node_id: str) -> list:
        return [e.source for e in self.in_edges(node_id)]

    def nodes_by_label(self, label: str) -> list:
        return [n for n in self.nodes if n.label == label]

    def find(self, ref: str) -> list:
        """Nodes addressed by ``ref``: label matches first, then node id."""
        hits = self.nodes_by_label(ref)
        if not hits and ref in self.node_map:
            hits = [self.node_map[ref]]
        return hits

    @property
    def start_nodes(self) -> list:
        return [n for n in self.nodes if n.kind == "start"]

    @property
    def end_nodes(self) -> list:
        return [n for n in self.nodes if n.kind == "end"]

    @property
    def tasks(self) -> list:
        return [n for n in self.nodes if n.kind == "task"]

    def labels(self) -> set:
        return {n.label for n in self.nodes}

    # -- functional updates -------------------------------------------------

    def evolve(self, nodes: Iterable[Node] = None, edges: Iterable[Edge] = None,
               **changes) -> "ProcessModel":
        if nodes is not None:
            changes["nodes"] = tuple(nodes)
        if edges is not None:
            changes["edges"] = tuple(edges)
        return replace(self, **changes)

    def with_node(self, node: Node) -> "ProcessModel":
        rest = [n for n in self.nodes if n.id != node.id]
        return self.evolve(nodes=rest + [node])


def fresh_id(taken, base: str) -> str:
    """``base`` if free, else ``base_2``, ``base_3`` ..."""
    if base not in taken:
        return base
    i = 2
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


def build(model_id: str, nodes: Iterable, edges: Iterable, **metadata) -> ProcessModel:
    """Compact constructor used by tests and fixtures.

    ``nodes`` items are ``Node`` instances or tuples ``(id, kind[, label])``;
    a gateway tuple is ``(id, "and"|"xor"|"or"[, label])``.
    ``edges`` items are ``(src, dst)`` or ``(src, dst, guard)``.
    """
    built = []
    for item in nodes:
        if isinstance(item, Node):
            built.append(item)
            continue
        node_id, kind, *rest = item
        label = rest[0] if rest else ""
        if kind in GATEWAY_KINDS:
            built.append(Node(node_id, "gateway", label, gateway_kind=kind))
        else:
            built.append(Node(node_id, kind, label))
    return ProcessModel(model_id, tuple(built),
                        tuple(Edge(*e) for e in edges), metadata)
