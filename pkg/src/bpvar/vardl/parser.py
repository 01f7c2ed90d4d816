"""Recursive-descent parser for VarDL documents."""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional

from ..cepc import CONNECTOR_RESTRICTIONS, CepcModel, Configuration
from ..errors import (BpvarError, DuplicateName, InvalidDeclaration,
                      UnresolvedReference)
from ..graph.model import GATEWAY_KINDS, Edge, Node, ProcessModel
from ..lexer import TokenStream, VarDLSyntaxError, tokenize
from ..pesoa import (GROUP_KINDS, Binding, FeatureGroup, FeatureModel,
                     StereotypedModel, StereotypeRecord)
from ..provop import ChangeOperation, Context, Option
from ..rules import TRUE, parse_expr, parse_rule
from ..worklet import EMPTY, EMPTY_WORKLET, RdrNode, RdrTree, Repertoire
from .document import Decl, Document

_NODE_KEYWORDS = ("start", "end", "task", "event", "gateway")


class _Env:
    """Name lookup used while building deferred declarations."""

    def __init__(self, local: list, scope: tuple):
        self.local = local
        self.scope = scope

    def process(self, name: str, span) -> ProcessModel:
        for d in list(self.local) + list(self.scope):
            if d.kind == "process" and d.name == name:
                return d.value
        raise UnresolvedReference(name, span, "process")

    def values(self, kind: str) -> list:
        return [d.value for d in list(self.local) + list(self.scope) if d.kind == kind]


class _Parser:
    def __init__(self, text: str, file: str):
        self.ts = TokenStream(tokenize(text, file))
        self.file = file

    # -- helpers ------------------------------------------------------------

    def _mapping(self) -> dict:
        """``{ key: "value", ... }`` with identifier or string keys."""
        ts = self.ts
        ts.expect("{")
        out = {}
        while not ts.accept("}"):
            key = ts.name_or_string("key")
            ts.expect(":")
            value = ts.name_or_string("value").text
            if key.text in out:
                raise DuplicateName("key", key.text, key.span)
            out[key.text] = value
            if not ts.at("}"):
                ts.expect(",")
        return out

    def _name_list(self) -> list:
        ts = self.ts
        ts.expect("{")
        items = []
        while True:
            items.append(ts.ident("name").text)
            if ts.accept("}"):
                return items
            ts.expect(",")

    def _rule(self):
        """Inline expression, or a quoted one."""
        tok = self.ts.peek
        if tok.kind == "STRING":
            self.ts.next()
            try:
                return parse_rule(tok.text, self.file)
            except VarDLSyntaxError as exc:
                raise VarDLSyntaxError(f"bad rule text: {exc}", tok.span) from None
        return parse_expr(self.ts)

    # -- top level ----------------------------------------------------------

    def parse(self):
        """Return (imports, raw declarations); raw values may be builders."""
        ts = self.ts
        imports, raw = [], []
        self.base_ref = None
        while ts.peek.kind != "EOF":
            tok = ts.peek
            if ts.accept("base"):
                ref = ts.ident("process name")
                ts.expect(";")
                if self.base_ref is not None:
                    raise DuplicateName("base statement", ref.text, ref.span)
                self.base_ref = ref
                continue
            if ts.accept("import"):
                path = ts.string("import path")
                ts.expect(";")
                imports.append((path.text, path.span))
                continue
            handler = {
                "process": self._process, "option": self._option,
                "context": self._context, "cepc": self._cepc,
                "cepc-config": self._cepc_config, "rdr": self._rdr,
                "repertoire": self._repertoire, "features": self._features,
                "stereotypes": self._stereotypes,
            }.get(tok.text if tok.kind == "IDENT" else "")
            if handler is None:
                ts.fail("expected a declaration", "'import'", "'base'", "'process'", "'option'",
                        "'context'", "'cepc'", "'cepc-config'", "'rdr'", "'repertoire'",
                        "'features'", "'stereotypes'")
            ts.next()
            kind, name, value = handler(tok.span)
            raw.append((kind, name, value, tok.span))
        return imports, raw

    # -- process ------------------------------------------------------------

    def _process(self, span):
        ts = self.ts
        name = ts.ident("process name").text
        ts.expect("{")
        nodes, edges, meta = {}, [], {}
        while not ts.accept("}"):
            tok = ts.peek
            nxt = ts.lookahead()
            if tok.kind == "IDENT" and nxt.kind == "PUNCT" and nxt.text == "->":
                ts.next()
                ts.next()
                dst = ts.ident("node id")
                guard = ts.next().text if ts.peek.kind == "STRING" else None
                ts.expect(";")
                edges.append(Edge(tok.text, dst.text, guard, span=tok.span))
                continue
            if ts.accept("meta"):
                key = ts.ident("metadata key")
                ts.expect("=")
                value = ts.string("metadata value").text
                ts.expect(";")
                if key.text in meta:
                    raise DuplicateName("metadata key", key.text, key.span)
                meta[key.text] = value
                continue
            worklet = ts.accept("worklet") is not None
            kind = (ts.expect("task") if worklet else
                    ts.expect(*_NODE_KEYWORDS)).text
            node_id = ts.ident("node id")
            gateway_kind = ts.expect(*GATEWAY_KINDS).text if kind == "gateway" else None
            label = ts.next().text if ts.peek.kind == "STRING" else ""
            attrs = self._mapping() if ts.accept("attrs") else {}
            role = ts.ident("role name").text if ts.accept("role") else None
            ts.expect(";")
            if node_id.text in nodes:
                raise DuplicateName("node", node_id.text, node_id.span)
            nodes[node_id.text] = Node(node_id.text, kind, label, gateway_kind, role,
                                       attrs, worklet, span=node_id.span)
        for e in edges:
            for end in (e.source, e.target):
                if end not in nodes:
                    raise UnresolvedReference(end, e.span, "node")
        seen = set()
        for e in edges:
            key = (e.source, e.target, e.guard)
            if key in seen:
                raise DuplicateName("edge", f"{e.source} -> {e.target}", e.span)
            seen.add(key)
        model = ProcessModel(name, tuple(nodes.values()), tuple(edges), meta, span=span)
        return "process", name, model

    # -- provop -------------------------------------------------------------

    def _anchor(self) -> str:
        return self.ts.name_or_string("node label").text

    def _between(self):
        self.ts.expect("between")
        after = self._anchor()
        self.ts.expect("and")
        return after, self._anchor()

    def _operation(self) -> Callable:
        ts = self.ts
        tok = ts.expect("INSERT", "DELETE", "MOVE", "MODIFY")
        verb = tok.text
        if verb == "INSERT":
            if ts.accept("process"):
                ref = ts.ident("process name")
                after, before = self._between()
                ts.expect(";")

                def build(env, ref=ref, after=after, before=before):
                    return ChangeOperation("insert", after=after, before=before,
                                           fragment=env.process(ref.text, ref.span),
                                           span=tok.span)
                return build
            ts.expect("task")
            label = ts.string("task label").text
            attrs = self._mapping() if ts.accept("attrs") else {}
            role = ts.ident("role name").text if ts.accept("role") else None
            after, before = self._between()
            ts.expect(";")
            node = Node("", "task", label, None, role, attrs)
            op = ChangeOperation("insert", after=after, before=before, fragment=node,
                                 span=tok.span)
            return lambda env: op
        if verb == "DELETE":
            target = self._anchor()
            ts.expect(";")
            op = ChangeOperation("delete", target=target, span=tok.span)
        elif verb == "MOVE":
            target = self._anchor()
            after, before = self._between()
            ts.expect(";")
            try:
                op = ChangeOperation("move", target=target, after=after, before=before,
                                     span=tok.span)
            except ValueError as exc:
                raise InvalidDeclaration(str(exc), tok.span) from None
        else:
            target = self._anchor()
            ts.expect(".")
            attr = ts.ident("attribute name").text
            ts.expect("=")
            value = ts.string("attribute value").text
            ts.expect(";")
            try:
                op = ChangeOperation("modify", target=target, attribute=attr, value=value,
                                     span=tok.span)
            except ValueError as exc:
                raise InvalidDeclaration(str(exc), tok.span) from None
        return lambda env: op

    def _option(self, span):
        ts = self.ts
        name = ts.ident("option name").text
        rule = self._rule() if ts.accept("rule") else None
        resolution = "design"
        if ts.accept("at"):
            resolution = ts.expect("run", "design").text
        ts.expect("{")
        builders = []
        while not ts.accept("}"):
            builders.append(self._operation())
        if not builders:
            raise InvalidDeclaration(f"option {name!r} has no operations", span)

        def build(env):
            ops = [b(env) for b in builders]
            try:
                return Option(name, ops, rule, resolution, span=span)
            except ValueError as exc:
                raise InvalidDeclaration(str(exc), span) from None
        return "option", name, build

    def _context(self, span):
        ts = self.ts
        name = ts.ident("context name").text
        ts.expect("{")
        values = {}
        while not ts.accept("}"):
            var = ts.ident("variable")
            ts.expect("=")
            value = ts.name_or_string("value").text
            ts.expect(";")
            if var.text in values:
                raise DuplicateName("variable", var.text, var.span)
            values[var.text] = value
        return "context", name, Context(name, values, span=span)

    # -- cepc ---------------------------------------------------------------

    def _cepc(self, span):
        ts = self.ts
        name = ts.ident("model name").text
        ts.expect("for")
        base_ref = ts.ident("process name")
        ts.expect("{")
        functions, connectors, requirements, guidelines = [], {}, [], []
        refs = []
        while not ts.accept("}"):
            if ts.accept("configurable"):
                if ts.accept("function"):
                    ref = ts.name_or_string("function")
                    functions.append(ref.text)
                else:
                    ts.expect("connector")
                    ref = ts.name_or_string("connector")
                    ts.expect("allow")
                    allowed = self._name_list()
                    for kind in allowed:
                        if kind not in CONNECTOR_RESTRICTIONS:
                            raise InvalidDeclaration(f"unknown connector kind {kind!r}", ref.span)
                    connectors[ref.text] = tuple(allowed)
                refs.append(ref)
                ts.expect(";")
            elif ts.accept("requirement"):
                requirements.append(self._rule())
                ts.expect(";")
            else:
                ts.expect("configurable", "requirement", "guideline")
                guidelines.append(self._rule())
                ts.expect(";")

        def build(env):
            base = env.process(base_ref.text, base_ref.span)
            for ref in refs:
                if not base.find(ref.text):
                    raise UnresolvedReference(ref.text, ref.span, "node")
            try:
                return CepcModel(name, base, functions, connectors, requirements,
                                 guidelines, span=span)
            except (BpvarError, ValueError) as exc:
                raise InvalidDeclaration(str(exc), span) from None
        return "cepc", name, build

    def _cepc_config(self, span):
        ts = self.ts
        name = ts.ident("configuration name").text
        ts.expect("{")
        decisions = {}
        while not ts.accept("}"):
            ref = ts.name_or_string("configurable node")
            ts.expect("=")
            choice = ts.ident("choice").text
            ts.expect(";")
            if ref.text in decisions:
                raise DuplicateName("decision", ref.text, ref.span)
            decisions[ref.text] = choice
        return "cepc-config", name, Configuration(name, decisions, span=span)

    # -- worklet ------------------------------------------------------------

    def _rdr(self, span):
        ts = self.ts
        ts.expect("for")
        task = ts.name_or_string("task label").text
        ts.expect("{")
        rules = {}  # id -> dict(fields)
        order = []
        root_id = None
        while not ts.accept("}"):
            if ts.accept("root"):
                tok = ts.peek
                rid = ts.next().text if tok.kind == "IDENT" else "root"
                ts.expect("->")
                conclusion = ts.ident("worklet name")
                cornerstone = self._mapping() if ts.accept("cornerstone") else None
                ts.expect(";")
                if root_id is not None:
                    raise DuplicateName("root rule", rid, tok.span)
                root_id = rid
                entry = dict(id=rid, conclusion=conclusion, condition=TRUE,
                             cornerstone=cornerstone, parent=None, span=tok.span)
            else:
                ts.expect("node", "root")
                nid = ts.ident("rule id")
                ts.expect("if")
                condition = parse_expr(ts)
                ts.expect("->")
                conclusion = ts.ident("worklet name")
                cornerstone = self._mapping() if ts.accept("cornerstone") else None
                ts.expect("at")
                parent = ts.ident("parent rule id")
                ts.expect(".")
                side = ts.expect("true", "false").text
                ts.expect(";")
                if parent.text not in rules:
                    raise UnresolvedReference(parent.text, parent.span, "parent rule")
                if any(r["parent"] == (parent.text, side) for r in rules.values()):
                    raise DuplicateName("rule slot", f"{parent.text}.{side}", parent.span)
                entry = dict(id=nid.text, conclusion=conclusion, condition=condition,
                             cornerstone=cornerstone, parent=(parent.text, side),
                             span=nid.span)
                rid = nid.text
            if rid in rules:
                raise DuplicateName("rule", rid, entry["span"])
            rules[rid] = entry
            order.append(rid)
        if root_id is None:
            raise InvalidDeclaration(f"tree for {task!r} has no root rule", span)

        def make(rid):
            r = rules[rid]
            kids = {side: make(c) for c in order
                    for side in ("true", "false") if rules[c]["parent"] == (rid, side)}
            return RdrNode(rid, r["conclusion"].text, r["condition"], r["cornerstone"],
                           kids.get("true"), kids.get("false"), span=r["span"])

        def build(env):
            reps = env.values("repertoire")
            if reps:
                for r in rules.values():
                    c = r["conclusion"]
                    if not any(c.text in rep for rep in reps):
                        raise UnresolvedReference(c.text, c.span, "worklet")
            try:
                return RdrTree(task, make(root_id), span=span)
            except ValueError as exc:
                raise InvalidDeclaration(str(exc), span) from None
        return "rdr", task, build

    def _repertoire(self, span):
        ts = self.ts
        name = ts.ident("repertoire name").text
        ts.expect("{")
        entries = []
        seen = set()
        while not ts.accept("}"):
            worklet = ts.ident("worklet name")
            ts.expect("=")
            if ts.accept(EMPTY):
                ref = None
            else:
                ts.expect("process", EMPTY)
                ref = ts.ident("process name")
            ts.expect(";")
            if worklet.text in seen:
                raise DuplicateName("worklet", worklet.text, worklet.span)
            seen.add(worklet.text)
            entries.append((worklet.text, ref))

        def build(env):
            resolved = {w: EMPTY_WORKLET if ref is None else env.process(ref.text, ref.span)
                        for w, ref in entries}
            try:
                return Repertoire(name, resolved, span=span)
            except BpvarError as exc:
                raise InvalidDeclaration(str(exc), span) from None
        return "repertoire", name, build

    # -- pesoa --------------------------------------------------------------

    def _features(self, span):
        ts = self.ts
        name = ts.ident("feature model name").text
        ts.expect("{")
        root = None
        groups, requires, excludes = [], [], []
        constraint_refs = []
        while not ts.accept("}"):
            tok = ts.peek
            nxt = ts.lookahead()
            if tok.kind == "IDENT" and nxt.kind == "IDENT" and nxt.text in GROUP_KINDS:
                parent = ts.next().text
                kind = ts.next().text
                children = self._name_list()
                ts.expect(";")
                groups.append(FeatureGroup(parent, kind, tuple(children)))
            elif ts.accept("root"):
                r = ts.ident("feature")
                ts.expect(";")
                if root is not None:
                    raise DuplicateName("root feature", r.text, r.span)
                root = r.text
            else:
                which = ts.expect("requires", "excludes", "root").text
                a, b = ts.ident("feature"), ts.ident("feature")
                ts.expect(";")
                constraint_refs += [a, b]
                (requires if which == "requires" else excludes).append((a.text, b.text))
        if root is None:
            raise InvalidDeclaration(f"feature model {name!r} has no root", span)
        known = {root} | {c for g in groups for c in g.children}
        for ref in constraint_refs:
            if ref.text not in known:
                raise UnresolvedReference(ref.text, ref.span, "feature")
        try:
            fm = FeatureModel(name, root, groups, requires, excludes, span=span)
        except ValueError as exc:
            raise InvalidDeclaration(str(exc), span) from None
        return "features", name, fm

    def _stereotypes(self, span):
        ts = self.ts
        name = ts.ident("annotation set name").text
        ts.expect("for")
        base_ref = ts.ident("process name")
        ts.expect("{")
        annotations, label_refs, variant_refs = {}, [], []
        bindings = {}

        def annotate(key, record, tok):
            if key in annotations:
                raise DuplicateName("annotation", key, tok.span)
            annotations[key] = record

        while not ts.accept("}"):
            tok = ts.peek
            word = ts.expect("varpoint", "variant", "optional", "null", "parameterized",
                             "bind").text
            if word == "variant":
                ref = ts.ident("process name")
                ts.expect("of")
                point = ts.string("varpoint label").text
                kind = "default" if ts.accept("default") else "variant"
                annotate(ref.text, StereotypeRecord(kind, point), ref)
                variant_refs.append(ref)
            elif word == "bind":
                feature = ts.ident("feature")
                if feature.text in bindings:
                    raise DuplicateName("binding block", feature.text, feature.span)
                bindings[feature.text] = self._bind_block()
                continue
            else:
                label = ts.string("node label")
                attrs = ()
                if word == "parameterized":
                    ts.expect("(")
                    items = [ts.ident("parameter").text]
                    while ts.accept(","):
                        items.append(ts.ident("parameter").text)
                    ts.expect(")")
                    attrs = tuple(items)
                annotate(label.text, StereotypeRecord(word, None, attrs), label)
                label_refs.append(label)
            ts.expect(";")

        def build(env):
            base = env.process(base_ref.text, base_ref.span)
            labels = base.labels()
            for ref in label_refs:
                if ref.text not in labels:
                    raise UnresolvedReference(ref.text, ref.span, "node label")
            variants = {r.text: env.process(r.text, r.span) for r in variant_refs}
            for feature, binds in bindings.items():
                for b, tok in binds:
                    if b.target not in annotations:
                        raise UnresolvedReference(b.target, tok.span, "annotated node")
                    if b.action == "variant" and b.value not in variants:
                        raise UnresolvedReference(b.value, tok.span, "variant")
            try:
                return StereotypedModel(
                    name, base, annotations, variants,
                    {f: tuple(b for b, _ in bs) for f, bs in bindings.items()}, span=span)
            except ValueError as exc:
                raise InvalidDeclaration(str(exc), span) from None
        return "stereotypes", name, build

    def _bind_block(self) -> list:
        ts = self.ts
        ts.expect("{")
        out = []
        while not ts.accept("}"):
            target = ts.string("node label")
            if ts.accept("."):
                attr = ts.ident("parameter").text
                ts.expect("=")
                value = ts.string("parameter value").text
                b = Binding(target.text, "param", value, attr)
            else:
                ts.expect("->", ".")
                if ts.accept("NULL"):
                    b = Binding(target.text, "null")
                elif ts.accept("INCLUDE"):
                    b = Binding(target.text, "include")
                else:
                    b = Binding(target.text, "variant", ts.ident("variant name").text)
            ts.expect(";")
            out.append((b, target))
        return out


# -- entry points ------------------------------------------------------------

def _merge_scope(imported: list, span) -> tuple:
    scope = {}
    for doc in imported:
        for d in doc.decls + doc.scope:
            key = (d.kind, d.name)
            if key in scope and scope[key].value != d.value:
                raise DuplicateName(d.kind, d.name, span)
            scope.setdefault(key, d)
    return tuple(scope.values())


def parse_document(text: str, file: str = "<string>",
                   base_dir: Optional[Path] = None, _stack: tuple = ()) -> Document:
    """Parse VarDL ``text``; imports resolve relative to ``base_dir``
    (default: the directory of ``file``)."""
    parser = _Parser(text, file)
    imports, raw = parser.parse()
    if base_dir is None:
        base_dir = Path(file).parent if file and not file.startswith("<") else Path.cwd()
    loaded = []
    for path, span in imports:
        target = (Path(base_dir) / path).resolve()
        if target in _stack:
            raise InvalidDeclaration(f"import cycle through {path!r}", span)
        if not target.is_file():
            raise UnresolvedReference(path, span, "import")
        loaded.append(load_document(target, _stack=_stack + (target,)))
    scope = _merge_scope(loaded, imports[0][1] if imports else None)

    seen = {}
    for kind, name, _, span in raw:
        if (kind, name) in seen or any(d.kind == kind and d.name == name for d in scope):
            raise DuplicateName(kind, name, span)
        seen[(kind, name)] = span

    # processes first, then everything else in dependency order
    decls: list = [None] * len(raw)
    built = []
    for i, (kind, name, value, span) in enumerate(raw):
        if kind == "process":
            decls[i] = Decl(kind, name, value, span)
            built.append(decls[i])
    env = _Env(built, scope)
    order = ("repertoire", "option", "context", "cepc", "cepc-config", "rdr",
             "features", "stereotypes")
    for wanted in order:
        for i, (kind, name, value, span) in enumerate(raw):
            if kind == wanted:
                val = value(env) if callable(value) else value
                decls[i] = Decl(kind, name, val, span)
                built.append(decls[i])
    base_name = None
    if parser.base_ref is not None:
        env.process(parser.base_ref.text, parser.base_ref.span)
        base_name = parser.base_ref.text
    doc = Document(tuple(decls), tuple(p for p, _ in imports), scope, file, base_name)
    _check_option_labels(doc)
    return doc


def _check_option_labels(doc: Document) -> None:
    options = doc.visible("option")
    known = set()
    for model in doc.visible("process"):
        known |= model.labels() | {n.id for n in model.nodes}
    for opt in options:
        for op in opt.operations:
            known |= op.introduced_labels()
    for opt in doc.options:
        for op in opt.operations:
            for label in sorted(op.referenced_labels()):
                if label not in known:
                    raise UnresolvedReference(label, op.span, "node label")


def load_document(path, _stack: tuple = ()) -> Document:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_document(text, str(path), path.parent, _stack or (path.resolve(),))
