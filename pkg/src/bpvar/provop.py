"""Option-based variant derivation: change operations applied to a base process."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Union

from .errors import (AnchorNotFound, ChangeError, CyclicModel, IllegalSplice,
                     InvalidResult, OptionFailed, OrderConflict, TargetNotFound,
                     UnstructuredModel)
from .graph.blocks import block_tree
from .graph.model import Node, ProcessModel
from .graph.rewrite import delete_node, splice, splice_node
from .graph.validate import validate_structure
from .rules import Evaluation, Expr, evaluate

log = logging.getLogger(__name__)

OPERATION_KINDS = ("insert", "delete", "move", "modify")


@dataclass(frozen=True)
class ChangeOperation:
    kind: str
    target: str = ""  # delete / move / modify
    after: str = ""  # insert / move anchors
    before: str = ""
    fragment: Union[ProcessModel, Node, None] = None
    attribute: str = ""
    value: str = ""
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in OPERATION_KINDS:
            raise ValueError(f"unknown change operation {self.kind!r}")
        if self.kind in ("insert", "move") and self.after == self.before:
            raise ValueError("insert/move anchors must be distinct")
        if self.kind == "insert" and self.fragment is None:
            raise ValueError("insert needs a fragment")
        if self.kind == "modify" and (not self.attribute or not self.value):
            raise ValueError("modify needs an attribute name and a non-empty value")

    def introduced_labels(self) -> set:
        if self.kind != "insert":
            return set()
        if isinstance(self.fragment, Node):
            return {self.fragment.label}
        return {n.label for n in self.fragment.nodes if n.kind not in ("start", "end")}

    def referenced_labels(self) -> set:
        return {x for x in (self.target, self.after, self.before) if x}

    def __str__(self):
        if self.kind == "insert":
            what = (self.fragment.label if isinstance(self.fragment, Node)
                    else f"process {self.fragment.id}")
            return f"INSERT {what} between {self.after!r} and {self.before!r}"
        if self.kind == "move":
            return f"MOVE {self.target!r} between {self.after!r} and {self.before!r}"
        if self.kind == "modify":
            return f"MODIFY {self.target!r}.{self.attribute} = {self.value!r}"
        return f"DELETE {self.target!r}"


def insert(fragment, after: str, before: str) -> ChangeOperation:
    return ChangeOperation("insert", after=after, before=before, fragment=fragment)


def delete(target: str) -> ChangeOperation:
    return ChangeOperation("delete", target=target)


def move(target: str, after: str, before: str) -> ChangeOperation:
    return ChangeOperation("move", target=target, after=after, before=before)


def modify(target: str, attribute: str, value: str) -> ChangeOperation:
    return ChangeOperation("modify", target=target, attribute=attribute, value=value)


@dataclass(frozen=True)
class Option:
    name: str
    operations: tuple
    rule: Optional[Expr] = None
    resolution: str = "design"  # design | run
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "operations", tuple(self.operations))
        if not self.operations:
            raise ValueError(f"option {self.name!r} has no operations")
        if self.resolution not in ("design", "run"):
            raise ValueError(f"bad resolution time {self.resolution!r}")


@dataclass(frozen=True)
class Context:
    """Named assignment of context variables (also used as worklet case data)."""

    name: str
    values: Mapping[str, str] = field(default_factory=dict)
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", dict(sorted(self.values.items())))


# -- context evaluation -----------------------------------------------------

def check_context_rule(rule: Expr, ctx: Mapping[str, str]) -> Evaluation:
    """Evaluate a context rule; unset variables make their comparison false."""
    result = evaluate(rule, ctx)
    for warning in result.warnings:
        log.debug(warning)
    return result


def _values(ctx) -> Mapping[str, str]:
    return ctx.values if isinstance(ctx, Context) else ctx


def partition_options(options, ctx) -> tuple:
    """Split ``options`` into (selected design-time options, run-time options)."""
    env = _values(ctx)
    design, runtime = [], []
    for opt in options:
        if opt.resolution == "run":
            runtime.append(opt)
        elif opt.rule is None or check_context_rule(opt.rule, env):
            design.append(opt)
    return design, runtime


def select_options(options, ctx) -> list:
    return partition_options(options, ctx)[0]


# -- operations -------------------------------------------------------------

def _lookup(model: ProcessModel, label: str, missing=TargetNotFound) -> Node:
    hits = model.find(label)
    if not hits:
        raise missing(label)
    if len(hits) > 1:
        raise IllegalSplice(f"label {label!r} is ambiguous in {model.id!r}")
    return hits[0]


def _reachable(model: ProcessModel, src: str, dst: str) -> bool:
    stack, seen = [src], set()
    while stack:
        cur = stack.pop()
        if cur == dst:
            return True
        if cur not in seen:
            seen.add(cur)
            stack.extend(model.successors(cur))
    return False


def _splice_edge(model: ProcessModel, after: str, before: str):
    a = _lookup(model, after, AnchorNotFound)
    b = _lookup(model, before, AnchorNotFound)
    if a.id == b.id:
        raise IllegalSplice("anchors must be distinct")
    for e in model.out_edges(a.id):
        if e.target == b.id:
            return e
    # no direct edge: the fragment goes right in front of the before-anchor
    incoming = model.in_edges(b.id)
    if len(incoming) == 1 and _reachable(model, a.id, b.id):
        return incoming[0]
    raise IllegalSplice(f"cannot place a fragment between {after!r} and {before!r}")


def _slug(label: str) -> str:
    slug = re.sub(r"[^A-Za-z0-9_]+", "_", label).strip("_")
    return slug if slug and not slug[0].isdigit() else f"n_{slug}"


def _insert(model: ProcessModel, fragment, after: str, before: str) -> ProcessModel:
    edge = _splice_edge(model, after, before)
    if isinstance(fragment, Node):
        node = fragment if fragment.id else replace(fragment, id=_slug(fragment.label))
        return splice_node(model, edge, node)
    return splice(model, edge, fragment, prefix=f"{fragment.id}_")


def _deletable(node: Node) -> None:
    if node.kind not in ("task", "event"):
        raise IllegalSplice(f"cannot delete or move {node.kind} node {node.label!r}")


def _check(model: ProcessModel) -> ProcessModel:
    violations = validate_structure(model)
    if violations:
        raise InvalidResult("result violates structure: "
                            + "; ".join(str(v) for v in violations), violations)
    try:
        block_tree(model)
    except (CyclicModel, UnstructuredModel) as exc:
        raise InvalidResult(f"result is not block-structured: {exc}") from exc
    return model


def apply_operation(model: ProcessModel, op: ChangeOperation) -> ProcessModel:
    """Apply one change operation; the result always passes validation."""
    if op.kind == "insert":
        result = _insert(model, op.fragment, op.after, op.before)
    elif op.kind == "delete":
        node = _lookup(model, op.target)
        _deletable(node)
        result = delete_node(model, node.id)
    elif op.kind == "move":
        node = _lookup(model, op.target)
        _deletable(node)
        if op.target in (op.after, op.before):
            raise IllegalSplice("cannot move a node next to itself")
        result = _insert(delete_node(model, node.id), node, op.after, op.before)
    else:
        node = _lookup(model, op.target)
        attrs = dict(node.attributes)
        attrs[op.attribute] = op.value
        result = model.with_node(replace(node, attributes=attrs))
    return _check(result)


def apply_option(model: ProcessModel, opt: Option) -> ProcessModel:
    """Apply all operations of ``opt`` in order, or none of them."""
    current = model
    for index, op in enumerate(opt.operations):
        try:
            current = apply_operation(current, op)
        except ChangeError as exc:
            raise OptionFailed(opt.name, index, exc) from exc
    return current


def derive_variant(base: ProcessModel, opts) -> ProcessModel:
    """Left fold of ``apply_option`` over the design-time options in ``opts``.

    Run-time options are skipped; they belong to the case simulator.
    A failure caused by a label that an earlier option removed, or that a
    later option would introduce, is reported as ``OrderConflict``.
    """
    opts = list(opts)
    model = _check(base)
    base_labels = base.labels()
    for position, opt in enumerate(opts):
        if opt.resolution == "run":
            log.info("skipping run-time option %s", opt.name)
            continue
        try:
            model = apply_option(model, opt)
        except OptionFailed as exc:
            cause = exc.cause
            if isinstance(cause, TargetNotFound):
                later = set().union(*(op.introduced_labels()
                                      for other in opts[position + 1:]
                                      for op in other.operations))
                if cause.label in base_labels or cause.label in later:
                    raise OrderConflict(
                        f"option {opt.name!r} needs {cause.label!r}, which the option "
                        f"order removed or has not introduced yet") from exc
            raise
    return model
