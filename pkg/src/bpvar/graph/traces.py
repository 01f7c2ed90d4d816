"""Brute-force trace semantics of structured acyclic process models."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

from .blocks import Activity, Branching, Sequence, block_tree
from .model import ProcessModel

DEFAULT_MAX_TRACES = 100_000
DEFAULT_MAX_LEN = 256


@dataclass(frozen=True)
class TraceSet:
    traces: frozenset
    overflow: bool = False

    def __len__(self):
        return len(self.traces)

    def __iter__(self):
        return iter(sorted(self.traces))

    def __contains__(self, trace):
        return tuple(trace) in self.traces


@lru_cache(maxsize=4096)
def _shuffle(a: tuple, b: tuple) -> frozenset:
    """All interleavings of ``a`` and ``b`` preserving each one's order."""
    if not a:
        return frozenset([b])
    if not b:
        return frozenset([a])
    left = {(a[0],) + rest for rest in _shuffle(a[1:], b)}
    right = {(b[0],) + rest for rest in _shuffle(a, b[1:])}
    return frozenset(left | right)


class _Budget:
    def __init__(self, max_traces: int, max_len: int):
        self.max_traces = max_traces
        self.max_len = max_len
        self.overflow = False

    def cap(self, traces: set) -> set:
        kept = {t for t in traces if len(t) <= self.max_len}
        if len(kept) < len(traces):
            self.overflow = True
        if len(kept) > self.max_traces:
            self.overflow = True
            kept = set(sorted(kept)[: self.max_traces])
        return kept


def _interleave_all(sets: list, budget: _Budget) -> set:
    acc = {()}
    for traces in sets:
        acc = budget.cap({m for x in acc for y in traces for m in _shuffle(x, y)})
    return acc


def _traces(block, budget: _Budget) -> set:
    if isinstance(block, Activity):
        return {(block.node.label,)}
    if isinstance(block, Sequence):
        acc = {()}
        for item in block.items:
            part = _traces(item, budget)
            acc = budget.cap({x + y for x in acc for y in part})
        return acc
    branch_sets = [_traces(seq, budget) for _, seq in block.branches]
    if block.kind == "xor":
        return budget.cap(set().union(*branch_sets))
    if block.kind == "and":
        return _interleave_all(branch_sets, budget)
    result = set()
    for k in range(1, len(branch_sets) + 1):
        for chosen in combinations(branch_sets, k):
            result |= _interleave_all(list(chosen), budget)
    return budget.cap(result)


def enumerate_traces(model: ProcessModel, max_traces: int = DEFAULT_MAX_TRACES,
                     max_len: int = DEFAULT_MAX_LEN) -> TraceSet:
    """Every completed task-label sequence of ``model``.

    AND blocks contribute all interleavings, XOR blocks the union of their
    branches and OR blocks the union over all non-empty branch subsets.
    Guards are treated as opaque. When a bound is hit the returned set is
    truncated and ``overflow`` is set. Raises ``CyclicModel`` on cycles.
    """
    budget = _Budget(max_traces, max_len)
    traces = _traces(block_tree(model), budget)
    return TraceSet(frozenset(traces), budget.overflow)


def trace_equivalent(a: ProcessModel, b: ProcessModel, **bounds) -> bool:
    ta, tb = enumerate_traces(a, **bounds), enumerate_traces(b, **bounds)
    return not ta.overflow and not tb.overflow and ta.traces == tb.traces
