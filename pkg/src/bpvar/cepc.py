"""Configurable EPCs: configurable functions/connectors, predicate checking,
and individualization into a plain process model."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping

from .errors import (CyclicModel, InvalidConfiguration, InvalidResult,
                     UnknownTarget, UnstructuredModel)
from .graph.blocks import block_tree, matching_joins
from .graph.model import ProcessModel
from .graph.rewrite import cleanup, delete_node, wrap_optional
from .graph.validate import validate_structure
from .rules import Decision, evaluate, format_expr

FUNCTION_CHOICES = ("on", "off", "opt")
CONNECTOR_RESTRICTIONS = {"or": ("or", "xor", "and"), "xor": ("xor",), "and": ("and",)}


def _decisions(expr) -> list:
    found = []

    def visit(e):
        if isinstance(e, Decision):
            found.append(e)
        for child in getattr(e, "operands", ()):
            visit(child)
        for attr in ("operand", "premise", "conclusion"):
            if hasattr(e, attr):
                visit(getattr(e, attr))

    visit(expr)
    return found


@dataclass(frozen=True)
class CepcModel:
    name: str
    base: ProcessModel
    functions: tuple = ()  # task labels (or node ids)
    connectors: Mapping[str, tuple] = field(default_factory=dict)  # gateway id -> allowed kinds
    requirements: tuple = ()
    guidelines: tuple = ()
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "requirements", tuple(self.requirements))
        object.__setattr__(self, "guidelines", tuple(self.guidelines))
        object.__setattr__(self, "connectors",
                           {k: tuple(v) for k, v in sorted(self.connectors.items())})
        for ref in self.functions:
            node = self._resolve_node(ref)
            if node.kind != "task":
                raise UnknownTarget(f"configurable function {ref!r} is not a task")
        for ref, allowed in self.connectors.items():
            node = self._resolve_node(ref)
            if not node.is_gateway:
                raise UnknownTarget(f"configurable connector {ref!r} is not a gateway")
            legal = CONNECTOR_RESTRICTIONS[node.gateway_kind]
            bad = [k for k in allowed if k not in legal]
            if bad or node.gateway_kind not in allowed:
                raise ValueError(f"connector {ref!r} ({node.gateway_kind}) cannot allow {allowed}")
        for pred in self.requirements + self.guidelines:
            for atom in _decisions(pred):
                self.node_id(atom.target)

    def _resolve_node(self, ref: str):
        hits = self.base.find(ref)
        if len(hits) != 1:
            raise UnknownTarget(f"{ref!r} does not name exactly one node of {self.base.id!r}")
        return hits[0]

    @cached_property
    def configurable(self) -> dict:
        """Node id -> reference as written, for every configurable node."""
        refs = {self._resolve_node(r).id: r for r in self.functions}
        refs.update({self._resolve_node(r).id: r for r in self.connectors})
        return refs

    def node_id(self, ref: str) -> str:
        """Configurable node id addressed by ``ref`` (label or id)."""
        ids = self.configurable
        for hit in self.base.find(ref):
            if hit.id in ids:
                return hit.id
        raise UnknownTarget(f"{ref!r} is not a configurable node of {self.name!r}")

    def choices(self, node_id: str) -> tuple:
        node = self.base.node(node_id)
        if node.is_gateway:
            return self.connectors[self.configurable[node_id]]
        return FUNCTION_CHOICES


@dataclass(frozen=True)
class Configuration:
    name: str
    decisions: Mapping[str, str] = field(default_factory=dict)
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "decisions", dict(sorted(self.decisions.items())))


@dataclass
class ConfigReport:
    errors: list = field(default_factory=list)  # violated requirements, verbatim
    warnings: list = field(default_factory=list)  # violated guidelines
    missing: list = field(default_factory=list)  # configurable nodes without decision
    illegal: list = field(default_factory=list)  # (target, choice) not allowed

    @property
    def complete(self) -> bool:
        return not self.missing

    @property
    def ok(self) -> bool:
        return self.complete and not self.errors and not self.illegal

    def lines(self) -> list:
        out = [f"error: requirement violated: {e}" for e in self.errors]
        out += [f"error: illegal choice {c!r} for {t!r}" for t, c in self.illegal]
        out += [f"error: no decision for {m!r}" for m in self.missing]
        out += [f"warning: guideline violated: {w}" for w in self.warnings]
        return out


def _normalize(cm: CepcModel, cfg) -> dict:
    decisions = cfg.decisions if isinstance(cfg, Configuration) else cfg
    by_id = {}
    for ref, choice in decisions.items():
        node_id = cm.node_id(ref)
        if node_id in by_id:
            raise UnknownTarget(f"two decisions address {node_id!r}")
        by_id[node_id] = choice
    return by_id


def _environment(cm: CepcModel, by_id: dict) -> dict:
    env = {}
    for node_id, choice in by_id.items():
        node = cm.base.node(node_id)
        env[node_id] = choice
        env[node.label] = choice
    return env


def validate_configuration(cm: CepcModel, cfg) -> ConfigReport:
    """Check completeness, legal choices, requirements and guidelines."""
    by_id = _normalize(cm, cfg)
    report = ConfigReport()
    for node_id, ref in sorted(cm.configurable.items()):
        if node_id not in by_id:
            report.missing.append(ref)
        elif by_id[node_id] not in cm.choices(node_id):
            report.illegal.append((ref, by_id[node_id]))
    env = _environment(cm, by_id)
    report.errors = [format_expr(p) for p in cm.requirements if not evaluate(p, env)]
    report.warnings = [format_expr(p) for p in cm.guidelines if not evaluate(p, env)]
    return report


def apply_configuration(cm: CepcModel, cfg) -> ProcessModel:
    """Individualize ``cm`` under a complete, valid configuration."""
    report = validate_configuration(cm, cfg)
    if not report.ok:
        raise InvalidConfiguration("; ".join(report.lines()), report)
    by_id = _normalize(cm, cfg)
    model = cm.base
    joins = matching_joins(model)
    nodes = dict(model.node_map)
    for node_id, choice in by_id.items():
        node = nodes[node_id]
        if node.is_gateway and choice != node.gateway_kind:
            nodes[node_id] = replace(node, gateway_kind=choice)
            join = joins[node_id]
            nodes[join] = replace(nodes[join], gateway_kind=choice)
    model = model.evolve(nodes=nodes.values())
    for node_id, choice in sorted(by_id.items()):
        if choice == "opt":
            model = wrap_optional(model, node_id)
    for node_id, choice in sorted(by_id.items()):
        if choice == "off":
            model = delete_node(model, node_id)
    model = cleanup(model)
    violations = validate_structure(model)
    if violations:
        raise InvalidResult("configured model is malformed: "
                            + "; ".join(map(str, violations)), violations)
    try:
        block_tree(model)
    except (CyclicModel, UnstructuredModel) as exc:
        raise InvalidResult(str(exc)) from exc
    return model.evolve(id=f"{cm.base.id}_{getattr(cfg, 'name', 'configured')}")
