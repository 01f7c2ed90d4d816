"""Decomposition of structured, acyclic process graphs into nested blocks.

Every split gateway must be closed by exactly one join of the same kind.
The resulting tree drives both the trace oracle and the case simulator.
"""

from __future__ import annotations

from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter

from ..errors import CyclicModel, UnstructuredModel
from .model import Node, ProcessModel


@dataclass(frozen=True)
class Activity:
    node: Node


@dataclass(frozen=True)
class Sequence:
    items: tuple = ()


@dataclass(frozen=True)
class Branching:
    kind: str  # and | xor | or
    split: str
    join: str
    branches: tuple = ()  # tuple of (guard, Sequence)


def check_acyclic(model: ProcessModel) -> None:
    graph = {n.id: set() for n in model.nodes}
    for e in model.edges:
        graph.setdefault(e.target, set()).add(e.source)
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise CyclicModel(f"model {model.id!r} has a cycle through {exc.args[1][0]!r}") from None


def _is_join(node: Node, model: ProcessModel) -> bool:
    return node.is_gateway and len(model.in_edges(node.id)) > 1


def _walk(model: ProcessModel, node_id: str) -> tuple:
    """Collect blocks from ``node_id`` until an end node or a join is met."""
    items = []
    cur = node_id
    while True:
        node = model.node(cur)
        if node.kind == "end" or _is_join(node, model):
            return tuple(items), cur
        out = model.out_edges(cur)
        if node.is_gateway and len(out) > 1:
            branches = []
            closers = set()
            for edge in out:
                sub, closer = _walk(model, edge.target)
                branches.append((edge.guard, Sequence(sub)))
                closers.add(closer)
            if len(closers) != 1:
                raise UnstructuredModel(
                    f"split {cur!r} reaches several closers: {sorted(closers)}")
            join = model.node(closers.pop())
            if not join.is_gateway or join.gateway_kind != node.gateway_kind:
                raise UnstructuredModel(
                    f"split {cur!r} ({node.gateway_kind}) is not closed by a matching join")
            items.append(Branching(node.gateway_kind, cur, join.id, tuple(branches)))
            cur = model.out_edges(join.id)[0].target
            continue
        if node.kind in ("task",):
            items.append(Activity(node))
        if not out:
            raise UnstructuredModel(f"node {cur!r} has no successor")
        cur = out[0].target


def block_tree(model: ProcessModel) -> Sequence:
    """Return the root sequence of ``model``; raises on cycles or unstructured splits."""
    check_acyclic(model)
    starts = model.start_nodes
    if len(starts) != 1:
        raise UnstructuredModel("model needs exactly one start node")
    items, closer = _walk(model, starts[0].id)
    if model.node(closer).kind != "end":
        raise UnstructuredModel(f"join {closer!r} has no matching split")
    return Sequence(items)


def matching_joins(model: ProcessModel) -> dict:
    """Map each split gateway id to its join id."""
    found = {}

    def visit(block):
        if isinstance(block, Sequence):
            for item in block.items:
                visit(item)
        elif isinstance(block, Branching):
            found[block.split] = block.join
            for _, seq in block.branches:
                visit(seq)

    visit(block_tree(model))
    return found


def walk_activities(block) -> list:
    """All activity nodes of a block tree in document order."""
    if isinstance(block, Activity):
        return [block.node]
    if isinstance(block, Sequence):
        return [n for item in block.items for n in walk_activities(item)]
    return [n for _, seq in block.branches for n in walk_activities(seq)]
