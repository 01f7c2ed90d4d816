"""Worklet late binding: ripple-down-rule selection trees, a repertoire of
worklets, incremental rule acquisition and a seeded case simulator."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Optional

from .errors import (ConditionRejectsCase, CornerstoneConflict, InvalidResult, MissingTree,
                     RedundantRule, UnknownWorklet)
from .graph.blocks import Activity, Branching, Sequence, block_tree
from .graph.model import Edge, Node, ProcessModel
from .graph.rewrite import replace_node
from .graph.validate import validate_structure
from .provop import apply_option, check_context_rule
from .rules import TRUE, Expr, evaluate, try_parse_rule

log = logging.getLogger(__name__)

EMPTY = "EMPTY"
EMPTY_WORKLET = ProcessModel(
    EMPTY, (Node("start", "start"), Node("end", "end")), (Edge("start", "end"),))


# -- rule trees -------------------------------------------------------------

@dataclass(frozen=True)
class RdrNode:
    id: str
    conclusion: str
    condition: Expr = TRUE
    cornerstone: Optional[Mapping[str, str]] = None
    true_child: Optional["RdrNode"] = None
    false_child: Optional["RdrNode"] = None
    span: object = field(default=None, compare=False, repr=False)

    def walk(self):
        yield self
        for child in (self.true_child, self.false_child):
            if child is not None:
                yield from child.walk()


@dataclass(frozen=True)
class RdrTree:
    task: str
    root: RdrNode
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.root.condition != TRUE:
            raise ValueError("the root rule of an RDR tree must have condition true")
        ids = [n.id for n in self.root.walk()]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate rule ids in tree for {self.task!r}")
        for n in self.root.walk():
            if n is not self.root and n.cornerstone is None:
                raise ValueError(f"rule {n.id!r} has no cornerstone case")

    def nodes(self) -> list:
        return list(self.root.walk())

    def conclusions(self) -> set:
        return {n.conclusion for n in self.root.walk()}


@dataclass(frozen=True)
class Selection:
    worklet: str
    path: tuple

    def __iter__(self):
        return iter((self.worklet, list(self.path)))


def select_worklet(tree: RdrTree, data: Mapping[str, str]) -> Selection:
    """Standard RDR traversal returning the last satisfied conclusion."""
    answer = tree.root.conclusion
    path = [tree.root.id]
    nxt = tree.root.true_child
    while nxt is not None:
        path.append(nxt.id)
        if evaluate(nxt.condition, data):
            answer = nxt.conclusion
            nxt = nxt.true_child
        else:
            nxt = nxt.false_child
    return Selection(answer, tuple(path))


def _last_visited(tree: RdrTree, data) -> tuple:
    """(node where traversal stopped, whether its condition held)."""
    node, held = tree.root, True
    while True:
        nxt = node.true_child if held else node.false_child
        if nxt is None:
            return node, held
        node, held = nxt, bool(evaluate(nxt.condition, data))


def _attach(node: RdrNode, parent_id: str, branch: str, child: RdrNode) -> RdrNode:
    if node.id == parent_id:
        return replace(node, **{f"{branch}_child": child})
    updates = {}
    for side in ("true", "false"):
        sub = getattr(node, f"{side}_child")
        if sub is not None:
            new = _attach(sub, parent_id, branch, child)
            if new is not sub:
                updates[f"{side}_child"] = new
    return replace(node, **updates) if updates else node


def add_rule(tree: RdrTree, case: Mapping[str, str], condition: Expr, conclusion: str,
             repertoire: Optional["Repertoire"] = None,
             node_id: Optional[str] = None) -> RdrTree:
    """Refine ``tree`` so that ``case`` selects ``conclusion``.

    The new rule hangs off the node where traversal of ``case`` stops, on
    its true side if that node fired and on its false side otherwise.
    Raises ``CornerstoneConflict`` when the condition would also flip the
    selection for a stored cornerstone case.
    """
    if repertoire is not None and conclusion not in repertoire:
        raise UnknownWorklet(f"{conclusion!r} is not in repertoire {repertoire.name!r}")
    if not evaluate(condition, case):
        raise ConditionRejectsCase("the new condition must hold for its cornerstone case")
    if select_worklet(tree, case).worklet == conclusion:
        raise RedundantRule(f"case already selects {conclusion!r}")
    taken = {n.id for n in tree.nodes()}
    if node_id is None:
        i = len(taken)
        while f"n{i}" in taken:
            i += 1
        node_id = f"n{i}"
    elif node_id in taken:
        raise ValueError(f"rule id {node_id!r} already used")
    stop, held = _last_visited(tree, case)
    child = RdrNode(node_id, conclusion, condition, dict(sorted(case.items())))
    root = _attach(tree.root, stop.id, "true" if held else "false", child)
    grown = replace(tree, root=root)
    # the condition must tell the new case apart from earlier cornerstones
    broken = [e.node for e in replay_cornerstones(grown) if not e.ok and e.node != node_id]
    if broken:
        raise CornerstoneConflict(
            f"condition also changes the selection for the cornerstone case of "
            f"{', '.join(broken)}", broken)
    return grown


@dataclass(frozen=True)
class ReplayEntry:
    node: str
    expected: str
    actual: str

    @property
    def ok(self) -> bool:
        return self.expected == self.actual


def replay_cornerstones(tree: RdrTree) -> list:
    """Re-select every stored cornerstone; mismatches signal a broken refinement."""
    report = []
    for n in tree.nodes():
        case = n.cornerstone if n.cornerstone is not None else {}
        report.append(ReplayEntry(n.id, n.conclusion, select_worklet(tree, case).worklet))
    return report


# -- repertoire -------------------------------------------------------------

@dataclass(frozen=True)
class Repertoire:
    name: str
    entries: Mapping[str, ProcessModel] = field(default_factory=dict)
    span: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(sorted(self.entries.items())))
        for worklet, model in self.entries.items():
            violations = validate_structure(model)
            if violations:
                raise InvalidResult(f"worklet {worklet!r} is malformed: "
                                    + "; ".join(map(str, violations)), violations)

    def __contains__(self, name: str) -> bool:
        return name == EMPTY or name in self.entries

    def model(self, name: str) -> ProcessModel:
        if name == EMPTY:
            return EMPTY_WORKLET
        try:
            return self.entries[name]
        except KeyError:
            raise UnknownWorklet(f"{name!r} is not in repertoire {self.name!r}") from None


def _tree_index(parent: ProcessModel, trees: Iterable[RdrTree], rep: Repertoire) -> dict:
    index = {t.task: t for t in trees}
    for node in parent.nodes:
        if node.worklet and node.label not in index:
            raise MissingTree(f"worklet-enabled task {node.label!r} has no selection tree")
    for tree in index.values():
        for conclusion in sorted(tree.conclusions()):
            if conclusion not in rep:
                raise UnknownWorklet(f"tree for {tree.task!r} concludes unknown worklet {conclusion!r}")
    return index


def bind_worklets(parent: ProcessModel, rep: Repertoire, trees: Iterable[RdrTree],
                  data: Mapping[str, str], max_depth: int = 16) -> ProcessModel:
    """Static counterpart of the simulator: inline every selected worklet."""
    index = _tree_index(parent, trees, rep)
    model = parent
    for _ in range(max_depth):
        pending = [n for n in model.nodes if n.worklet]
        if not pending:
            return model.evolve(id=f"{parent.id}_bound")
        node = pending[0]
        if node.label not in index:
            raise MissingTree(f"worklet-enabled task {node.label!r} has no selection tree")
        chosen = select_worklet(index[node.label], data).worklet
        model = replace_node(model, node.id, rep.model(chosen), prefix=f"{chosen}_")
    raise InvalidResult("worklet nesting exceeds the depth limit")


# -- simulation -------------------------------------------------------------

@dataclass(frozen=True)
class CaseEvent:
    kind: str  # task-started | worklet-selected | subcase-started | subcase-completed | task-completed
    task: str = ""
    worklet: str = ""
    path: tuple = ()
    depth: int = 0

    def line(self) -> str:
        parts = [self.kind, self.task]
        if self.worklet:
            parts.append(self.worklet)
        if self.path:
            parts.append("/".join(self.path))
        return "\t".join(("  " * self.depth + parts[0], *parts[1:]))


@dataclass(frozen=True)
class CaseLog:
    events: tuple
    seed: Optional[int] = None

    @property
    def trace(self) -> tuple:
        return tuple(e.task for e in self.events
                     if e.kind == "task-completed" and not e.worklet)

    def lines(self) -> list:
        return [e.line() for e in self.events] + ["trace\t" + " ; ".join(self.trace)]


Chooser = Callable[[int], int]


class _Run:
    def __init__(self, rep: Repertoire, trees: dict, data: Mapping[str, str], choose: Chooser):
        self.rep = rep
        self.trees = trees
        self.data = data
        self.choose = choose

    def pick(self, n: int) -> int:
        return 0 if n == 1 else self.choose(n)

    def candidates(self, block: Branching) -> tuple:
        """Branch indexes whose guard holds, else those with opaque guards, else all."""
        held, opaque = [], []
        for i, (guard, _) in enumerate(block.branches):
            rule = try_parse_rule(guard) if guard else None
            if rule is None:
                opaque.append(i)
            elif evaluate(rule, self.data):
                held.append(i)
        if held:
            return held, True
        if opaque:
            return opaque, False
        log.debug("no guard of split %s matches the case data", block.split)
        return list(range(len(block.branches))), False

    def units(self, block, depth: int) -> list:
        if isinstance(block, Activity):
            node = block.node
            if not node.worklet:
                return [(CaseEvent("task-started", node.label, depth=depth),
                         CaseEvent("task-completed", node.label, depth=depth))]
            return self.subcase(node, depth)
        if isinstance(block, Sequence):
            return [u for item in block.items for u in self.units(item, depth)]
        cands, decided = self.candidates(block)
        if block.kind == "xor":
            chosen = [cands[self.pick(len(cands))]]
        elif block.kind == "and":
            chosen = list(range(len(block.branches)))
        elif decided:
            chosen = cands
        else:
            # non-empty subset of the opaque branches, indexed as a bit mask
            mask = self.pick(2 ** len(cands) - 1) + 1
            chosen = [c for bit, c in enumerate(cands) if mask >> bit & 1]
        lanes = [self.units(block.branches[i][1], depth) for i in chosen]
        return self.merge(lanes)

    def merge(self, lanes: list) -> list:
        lanes = [list(l) for l in lanes if l]
        out = []
        while lanes:
            i = self.pick(len(lanes))
            out.append(lanes[i].pop(0))
            if not lanes[i]:
                lanes.pop(i)
        return out

    def subcase(self, node: Node, depth: int) -> list:
        sel = select_worklet(self.trees[node.label], self.data)
        body = self.rep.model(sel.worklet)
        head = (CaseEvent("task-started", node.label, sel.worklet, depth=depth),
                CaseEvent("worklet-selected", node.label, sel.worklet, sel.path, depth),
                CaseEvent("subcase-started", node.label, sel.worklet, depth=depth + 1))
        tail = (CaseEvent("subcase-completed", node.label, sel.worklet, depth=depth + 1),
                CaseEvent("task-completed", node.label, sel.worklet, depth=depth))
        return [head] + self.units(block_tree(body), depth + 1) + [tail]


def _prepare(parent, rep, trees, data, runtime_options):
    for opt in runtime_options:
        if opt.rule is None or check_context_rule(opt.rule, data):
            parent = apply_option(parent, opt)
    index = _tree_index(parent, trees, rep)
    return block_tree(parent), index


def execute_case(parent: ProcessModel, rep: Repertoire, trees: Iterable[RdrTree],
                 data: Mapping[str, str], seed: int = 0, runtime_options=()) -> CaseLog:
    """Simulate one case of ``parent`` with late-bound worklets.

    Guarded choices follow the case data; every remaining choice (unmatched
    guards, interleaving of parallel branches) is drawn from ``seed``.
    Run-time options whose rule holds for ``data`` are applied to the parent
    before the case starts.
    """
    root, index = _prepare(parent, rep, trees, data, runtime_options)
    rng = random.Random(seed)
    run = _Run(rep, index, data, rng.randrange)
    events = [e for unit in run.units(root, 0) for e in unit]
    return CaseLog(tuple(events), seed)


@dataclass(frozen=True)
class CaseEnumeration:
    traces: frozenset
    runs: int
    overflow: bool = False


def enumerate_cases(parent: ProcessModel, rep: Repertoire, trees: Iterable[RdrTree],
                    data: Mapping[str, str], max_runs: int = 200_000,
                    runtime_options=()) -> CaseEnumeration:
    """Exhaustive mode: explore every scheduler choice sequence once."""
    root, index = _prepare(parent, rep, trees, data, runtime_options)
    traces = set()
    stack = [()]
    runs = 0
    while stack:
        if runs >= max_runs:
            return CaseEnumeration(frozenset(traces), runs, True)
        prefix = stack.pop()
        made, sizes = [], []

        def choose(n: int, prefix=prefix, made=made, sizes=sizes) -> int:
            i = len(made)
            c = prefix[i] if i < len(prefix) else 0
            made.append(c)
            sizes.append(n)
            return c

        events = [e for unit in _Run(rep, index, data, choose).units(root, 0) for e in unit]
        traces.add(CaseLog(tuple(events)).trace)
        runs += 1
        for j in range(len(prefix), len(made)):
            for alt in range(1, sizes[j]):
                stack.append(tuple(made[:j]) + (alt,))
    return CaseEnumeration(frozenset(traces), runs)
