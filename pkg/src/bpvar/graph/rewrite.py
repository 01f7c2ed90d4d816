"""Low-level graph rewriting shared by the variability engines.

All functions are pure: they return new models and never validate; callers
decide when a result must pass ``validate_structure``.
"""

from __future__ import annotations

from dataclasses import replace

from ..errors import IllegalSplice
from .model import Edge, Node, ProcessModel, fresh_id


def _merge_parallel(edges) -> list:
    grouped: dict = {}
    for e in edges:
        grouped.setdefault((e.source, e.target), []).append(e)
    merged = []
    for (src, dst), group in grouped.items():
        guards = {e.guard for e in group}
        guard = guards.pop() if len(guards) == 1 else None
        merged.append(Edge(src, dst, guard))
    return merged


def _drop_empty_and_branches(model: ProcessModel):
    for node in model.nodes:
        if node.gateway_kind != "and" or len(model.out_edges(node.id)) < 2:
            continue
        for e in model.out_edges(node.id):
            tgt = model.node_map.get(e.target)
            if tgt is not None and tgt.gateway_kind == "and" and len(model.in_edges(tgt.id)) > 1:
                return model.evolve(edges=[x for x in model.edges if x != e])
    return None


def _dissolve_one(model: ProcessModel):
    for node in model.nodes:
        if not node.is_gateway:
            continue
        ins, outs = model.in_edges(node.id), model.out_edges(node.id)
        if len(ins) == 1 and len(outs) == 1:
            inc, out = ins[0], outs[0]
            edges = [e for e in model.edges if e is not inc and e is not out]
            edges.append(Edge(inc.source, out.target, inc.guard or out.guard))
            nodes = [n for n in model.nodes if n.id != node.id]
            return model.evolve(nodes=nodes, edges=_merge_parallel(edges))
    return None


def cleanup(model: ProcessModel) -> ProcessModel:
    """Merge parallel edges, drop empty AND branches, dissolve 1-in/1-out gateways."""
    model = model.evolve(edges=_merge_parallel(model.edges))
    while True:
        nxt = _drop_empty_and_branches(model) or _dissolve_one(model)
        if nxt is None:
            return model
        model = nxt


def delete_node(model: ProcessModel, node_id: str) -> ProcessModel:
    """Remove ``node_id`` and connect its predecessors to its successors."""
    ins, outs = model.in_edges(node_id), model.out_edges(node_id)
    edges = [e for e in model.edges if e.source != node_id and e.target != node_id]
    for i in ins:
        for o in outs:
            edges.append(Edge(i.source, o.target, i.guard or o.guard))
    nodes = [n for n in model.nodes if n.id != node_id]
    return cleanup(model.evolve(nodes=nodes, edges=edges))


def fragment_body(fragment: ProcessModel):
    """Split a start→…→end fragment into (nodes, edges, entry, exit).

    ``entry``/``exit`` are ``None`` for an empty fragment (start→end).
    """
    starts, ends = fragment.start_nodes, fragment.end_nodes
    if len(starts) != 1 or len(ends) != 1:
        raise IllegalSplice(f"fragment {fragment.id!r} needs one start and one end")
    start, end = starts[0].id, ends[0].id
    (entry,) = fragment.successors(start)
    (exit_,) = fragment.predecessors(end)
    if entry == end:
        return [], [], None, None
    nodes = [n for n in fragment.nodes if n.id not in (start, end)]
    edges = [e for e in fragment.edges if start not in (e.source, e.target)
             and end not in (e.source, e.target)]
    return nodes, edges, entry, exit_


def _rename(model: ProcessModel, nodes, edges, prefix: str):
    taken = set(model.node_map)
    mapping = {}
    for n in nodes:
        new = fresh_id(taken, f"{prefix}{n.id}")
        taken.add(new)
        mapping[n.id] = new
    renamed_nodes = [replace(n, id=mapping[n.id]) for n in nodes]
    renamed_edges = [Edge(mapping[e.source], mapping[e.target], e.guard) for e in edges]
    return renamed_nodes, renamed_edges, mapping


def splice(model: ProcessModel, edge: Edge, fragment: ProcessModel,
           prefix: str = "") -> ProcessModel:
    """Insert the body of ``fragment`` on ``edge``."""
    nodes, edges, entry, exit_ = fragment_body(fragment)
    if entry is None:
        return model
    nodes, edges, mapping = _rename(model, nodes, edges, prefix)
    kept = [e for e in model.edges if e != edge]
    kept += edges
    kept.append(Edge(edge.source, mapping[entry], edge.guard))
    kept.append(Edge(mapping[exit_], edge.target))
    return model.evolve(nodes=list(model.nodes) + nodes, edges=kept)


def splice_node(model: ProcessModel, edge: Edge, node: Node) -> ProcessModel:
    """Insert a single node on ``edge`` keeping its id (fresh if taken)."""
    if node.id in model.node_map:
        node = replace(node, id=fresh_id(set(model.node_map), node.id))
    kept = [e for e in model.edges if e != edge]
    kept.append(Edge(edge.source, node.id, edge.guard))
    kept.append(Edge(node.id, edge.target))
    return model.evolve(nodes=list(model.nodes) + [node], edges=kept)


def replace_node(model: ProcessModel, node_id: str, fragment: ProcessModel,
                 prefix: str = "") -> ProcessModel:
    """Substitute ``node_id`` by the body of ``fragment`` (delete if empty)."""
    nodes, _, entry, _ = fragment_body(fragment)
    if entry is None:
        return delete_node(model, node_id)
    ins, outs = model.in_edges(node_id), model.out_edges(node_id)
    if len(ins) != 1 or len(outs) != 1:
        raise IllegalSplice(f"node {node_id!r} is not a single-entry single-exit task")
    inc, out = ins[0], outs[0]
    edges = [e for e in model.edges if e is not inc and e is not out]
    bridge = Edge(inc.source, out.target, inc.guard or out.guard)
    edges.append(bridge)
    stripped = model.evolve(nodes=[n for n in model.nodes if n.id != node_id], edges=edges)
    return splice(stripped, bridge, fragment, prefix)


def skip_labels(label: str) -> tuple:
    return f"skip-split:{label}", f"skip-join:{label}"


def wrap_optional(model: ProcessModel, node_id: str) -> ProcessModel:
    """Put ``node_id`` inside an XOR split/join that can bypass it."""
    node = model.node(node_id)
    ins, outs = model.in_edges(node_id), model.out_edges(node_id)
    if len(ins) != 1 or len(outs) != 1:
        raise IllegalSplice(f"node {node_id!r} is not a single-entry single-exit task")
    taken = set(model.node_map)
    split_id = fresh_id(taken, f"{node_id}_skip_split")
    join_id = fresh_id(taken | {split_id}, f"{node_id}_skip_join")
    split_label, join_label = skip_labels(node.label)
    inc, out = ins[0], outs[0]
    edges = [e for e in model.edges if e is not inc and e is not out]
    edges += [Edge(inc.source, split_id, inc.guard), Edge(split_id, node_id),
              Edge(split_id, join_id), Edge(node_id, join_id),
              Edge(join_id, out.target)]
    nodes = list(model.nodes) + [
        Node(split_id, "gateway", split_label, gateway_kind="xor"),
        Node(join_id, "gateway", join_label, gateway_kind="xor"),
    ]
    return model.evolve(nodes=nodes, edges=edges)
