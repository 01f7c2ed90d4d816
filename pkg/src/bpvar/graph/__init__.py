"""Process-graph metamodel, validation, trace oracle and comparison."""

from .blocks import block_tree, matching_joins
from .compare import Difference, Isomorphism, apply_diff, diff, isomorphic
from .model import Edge, Node, ProcessModel, Trace, build
from .traces import TraceSet, enumerate_traces, trace_equivalent
from .validate import Violation, validate_structure

__all__ = [
    "Difference", "Edge", "Isomorphism", "Node", "ProcessModel", "Trace",
    "TraceSet", "Violation", "apply_diff", "block_tree", "build", "diff",
    "enumerate_traces", "isomorphic", "matching_joins", "trace_equivalent",
    "validate_structure",
]
