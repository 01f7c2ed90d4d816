"""Structured export: a versioned JSON rendering of engine results.

Every document is an object with ``format`` = ``"bpvar-export"``, an integer
``version`` and a ``kind``; the remaining keys depend on the kind:

``process-model``
    ``model``: ``{id, metadata, nodes: [...], edges: [...]}``.  Nodes carry
    ``id, kind, label`` and, when present, ``gateway_kind, role,
    attributes, worklet``; edges carry ``source, target`` and optional
    ``guard``.
``case-log``
    ``seed`` and ``events``: ``[{kind, task, worklet, path, depth}]`` plus
    the derived ``trace``.
``trace-set``
    ``traces``: sorted list of label lists, ``overflow`` flag.
``config-report``
    ``errors, warnings, missing, illegal`` lists.

Keys are sorted and output is indented, so identical inputs give
byte-identical files.
"""

from __future__ import annotations

import json

from .graph.model import Edge, Node, ProcessModel

FORMAT = "bpvar-export"
VERSION = 1


def _envelope(kind: str, **body) -> dict:
    return {"format": FORMAT, "version": VERSION, "kind": kind, **body}


def dumps(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def model_to_dict(model: ProcessModel) -> dict:
    nodes = []
    for n in model.nodes:
        entry = {"id": n.id, "kind": n.kind, "label": n.label}
        if n.gateway_kind:
            entry["gateway_kind"] = n.gateway_kind
        if n.role:
            entry["role"] = n.role
        if n.attributes:
            entry["attributes"] = dict(n.attributes)
        if n.worklet:
            entry["worklet"] = True
        nodes.append(entry)
    edges = []
    for e in model.edges:
        entry = {"source": e.source, "target": e.target}
        if e.guard is not None:
            entry["guard"] = e.guard
        edges.append(entry)
    return {"id": model.id, "metadata": dict(model.metadata), "nodes": nodes, "edges": edges}


def model_from_dict(data: dict) -> ProcessModel:
    nodes = [Node(n["id"], n["kind"], n.get("label", ""), n.get("gateway_kind"),
                  n.get("role"), n.get("attributes", {}), n.get("worklet", False))
             for n in data["nodes"]]
    edges = [Edge(e["source"], e["target"], e.get("guard")) for e in data["edges"]]
    return ProcessModel(data["id"], nodes, edges, data.get("metadata", {}))


def export_model(model: ProcessModel) -> str:
    return dumps(_envelope("process-model", model=model_to_dict(model)))


def import_model(text: str) -> ProcessModel:
    data = json.loads(text)
    if data.get("format") != FORMAT or data.get("kind") != "process-model":
        raise ValueError("not a structured process-model export")
    if data.get("version") != VERSION:
        raise ValueError(f"unsupported export version {data.get('version')!r}")
    return model_from_dict(data["model"])


def export_case_log(log) -> str:
    events = [{"kind": e.kind, "task": e.task, "worklet": e.worklet,
               "path": list(e.path), "depth": e.depth} for e in log.events]
    return dumps(_envelope("case-log", seed=log.seed, events=events, trace=list(log.trace)))


def export_traces(traces, overflow: bool = False) -> str:
    return dumps(_envelope("trace-set", traces=sorted(list(t) for t in traces),
                           overflow=overflow))


def export_report(report) -> str:
    return dumps(_envelope("config-report", errors=list(report.errors),
                           warnings=list(report.warnings), missing=list(report.missing),
                           illegal=[list(x) for x in report.illegal]))
