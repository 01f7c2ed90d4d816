"""Feature-driven resolution of stereotype-annotated process models."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .errors import (ConflictingBindings, CyclicModel, InvalidResult,
                     InvalidSelection, UnboundVariationPoint, UnstructuredModel)
from .graph.blocks import block_tree
from .graph.model import ProcessModel
from .graph.rewrite import delete_node, replace_node
from .graph.validate import validate_structure

GROUP_KINDS = ("mandatory", "optional", "alternative", "or")
STEREOTYPES = ("varpoint", "variant", "default", "optional", "null", "parameterized")
NULL = "NULL"
INCLUDE = "INCLUDE"


# -- feature models ---------------------------------------------------------

@dataclass(frozen=True)
class FeatureGroup:
    parent: str
    kind: str
    children: tuple

    def __post_init__(self):
        if self.kind not in GROUP_KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        if not self.children:
            raise ValueError(f"empty {self.kind} group under {self.parent!r}")


@dataclass(frozen=True)
class FeatureModel:
    name: str
    root: str
    groups: tuple = ()
    requires: tuple = ()  # (feature, required feature)
    excludes: tuple = ()  # (feature, excluded feature)
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "requires", tuple(tuple(p) for p in self.requires))
        object.__setattr__(self, "excludes", tuple(tuple(p) for p in self.excludes))
        parents = {}
        for g in self.groups:
            for child in g.children:
                if child in parents or child == self.root:
                    raise ValueError(f"feature {child!r} appears twice in the tree")
                parents[child] = g.parent
        features = self.features
        for g in self.groups:
            if g.parent not in features:
                raise ValueError(f"group parent {g.parent!r} is not in the tree")
        for a, b in self.requires + self.excludes:
            for f in (a, b):
                if f not in features:
                    raise ValueError(f"constraint mentions unknown feature {f!r}")

    @property
    def parent_of(self) -> dict:
        return {c: g.parent for g in self.groups for c in g.children}

    @property
    def features(self) -> set:
        return {self.root} | set(self.parent_of)


def validate_selection(fm: FeatureModel, selection) -> list:
    """Violations of ``selection`` against ``fm``, as (rule, features) tuples."""
    sel = set(selection)
    out = []
    unknown = sorted(sel - fm.features)
    if unknown:
        out.append(("unknown-feature", tuple(unknown)))
    if fm.root not in sel:
        out.append(("root-missing", (fm.root,)))
    for child, parent in sorted(fm.parent_of.items()):
        if child in sel and parent not in sel:
            out.append(("parent-missing", (child, parent)))
    for g in fm.groups:
        if g.parent not in sel:
            continue
        picked = [c for c in g.children if c in sel]
        if g.kind == "mandatory":
            missing = tuple(c for c in g.children if c not in sel)
            if missing:
                out.append(("mandatory-missing", missing))
        elif g.kind == "alternative" and len(picked) != 1:
            out.append(("alternative-group", g.children))
        elif g.kind == "or" and not picked:
            out.append(("or-group", g.children))
    for a, b in fm.requires:
        if a in sel and b not in sel:
            out.append(("requires", (a, b)))
    for a, b in fm.excludes:
        if a in sel and b in sel:
            out.append(("excludes", (a, b)))
    return out


# -- stereotyped models -----------------------------------------------------

@dataclass(frozen=True)
class StereotypeRecord:
    kind: str
    varpoint: Optional[str] = None  # for variant / default
    attributes: tuple = ()  # for parameterized

    def __post_init__(self):
        if self.kind not in STEREOTYPES:
            raise ValueError(f"unknown stereotype {self.kind!r}")
        if (self.kind in ("variant", "default")) != (self.varpoint is not None):
            raise ValueError(f"{self.kind} stereotype and varpoint reference disagree")


@dataclass(frozen=True)
class Binding:
    target: str  # annotated node label
    action: str  # variant | null | include | param
    value: str = ""  # variant name, or parameter value
    attribute: str = ""

    def key(self) -> tuple:
        return (self.target, self.action if self.action != "param" else f"param:{self.attribute}")


@dataclass(frozen=True)
class StereotypedModel:
    name: str
    base: ProcessModel
    annotations: Mapping[str, StereotypeRecord] = field(default_factory=dict)
    variants: Mapping[str, ProcessModel] = field(default_factory=dict)
    bindings: Mapping[str, tuple] = field(default_factory=dict)  # feature -> bindings
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "annotations", dict(self.annotations))
        object.__setattr__(self, "variants", dict(self.variants))
        object.__setattr__(self, "bindings",
                           {k: tuple(v) for k, v in self.bindings.items()})
        labels = self.base.labels()
        points = self.varpoints()
        for key, rec in self.annotations.items():
            if rec.kind in ("variant", "default"):
                if key not in self.variants:
                    raise ValueError(f"variant {key!r} has no process")
                if rec.varpoint not in points:
                    raise ValueError(f"variant {key!r} refers to unknown varpoint {rec.varpoint!r}")
            elif key not in labels:
                raise ValueError(f"annotated node {key!r} is not in {self.base.id!r}")
        for vp in points:
            options = self.variants_of(vp)
            if not options:
                raise ValueError(f"varpoint {vp!r} has no variants")
            if sum(1 for _, d in options if d) > 1:
                raise ValueError(f"varpoint {vp!r} has several defaults")
        for feature, binds in self.bindings.items():
            for b in binds:
                if b.target not in self.annotations:
                    raise ValueError(f"feature {feature!r} binds unannotated {b.target!r}")

    def varpoints(self) -> list:
        return sorted(k for k, r in self.annotations.items() if r.kind == "varpoint")

    def variants_of(self, varpoint: str) -> list:
        return sorted((k, r.kind == "default") for k, r in self.annotations.items()
                      if r.kind in ("variant", "default") and r.varpoint == varpoint)

    def default_of(self, varpoint: str) -> Optional[str]:
        for name, is_default in self.variants_of(varpoint):
            if is_default:
                return name
        return None


def _active_bindings(sm: StereotypedModel, sel) -> dict:
    chosen: dict = {}
    for feature in sorted(sel):
        for b in sm.bindings.get(feature, ()):
            key = b.key()
            if key in chosen and chosen[key][1] != b:
                raise ConflictingBindings(
                    f"features {chosen[key][0]!r} and {feature!r} bind {b.target!r} differently")
            chosen.setdefault(key, (feature, b))
    return {k: b for k, (_, b) in chosen.items()}


def resolve(sm: StereotypedModel, fm: FeatureModel, selection) -> ProcessModel:
    """Resolve every variation point of ``sm`` for a valid feature selection."""
    sel = set(selection)
    violations = validate_selection(fm, sel)
    if violations:
        raise InvalidSelection(f"invalid selection: {violations}", violations)
    active = _active_bindings(sm, sel)
    by_target: dict = {}
    for (target, _), b in active.items():
        by_target.setdefault(target, []).append(b)

    model = sm.base
    node_of = {n.label: n.id for n in model.nodes}
    deletions, replacements = [], []
    for label, rec in sorted(sm.annotations.items()):
        if rec.kind in ("variant", "default"):
            continue
        binds = by_target.get(label, [])
        structural = [b for b in binds if b.action != "param"]
        if len(structural) > 1:
            raise ConflictingBindings(f"{label!r} bound to several actions")
        action = structural[0] if structural else None
        if action is not None and action.action == "null":
            if rec.kind not in ("varpoint", "null"):
                raise ConflictingBindings(f"{label!r} is not null-capable")
            deletions.append(node_of[label])
            continue
        if rec.kind == "varpoint":
            variant = action.value if action is not None else sm.default_of(label)
            if variant is None:
                raise UnboundVariationPoint(f"no binding and no default for {label!r}")
            if variant not in dict(sm.variants_of(label)):
                raise ConflictingBindings(f"{variant!r} is not a variant of {label!r}")
            replacements.append((node_of[label], variant))
        elif rec.kind == "optional" and action is None:
            deletions.append(node_of[label])
        params = [b for b in binds if b.action == "param"]
        if params:
            if rec.kind != "parameterized":
                raise ConflictingBindings(f"{label!r} is not parameterized")
            node = model.node(node_of[label])
            attrs = dict(node.attributes)
            for b in params:
                if b.attribute not in rec.attributes:
                    raise ConflictingBindings(f"{label!r} has no parameter {b.attribute!r}")
                attrs[b.attribute] = b.value
            model = model.with_node(replace(node, attributes=attrs))
    for node_id, variant in replacements:
        model = replace_node(model, node_id, sm.variants[variant], prefix=f"{variant}_")
    for node_id in deletions:
        model = delete_node(model, node_id)
    problems = validate_structure(model)
    if problems:
        raise InvalidResult("resolved model is malformed: " + "; ".join(map(str, problems)),
                            problems)
    try:
        block_tree(model)
    except (CyclicModel, UnstructuredModel) as exc:
        raise InvalidResult(str(exc)) from exc
    return model.evolve(id=f"{sm.base.id}_resolved")
