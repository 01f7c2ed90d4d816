import itertools
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bpvar.errors import AmbiguousLabels, CyclicModel, UnstructuredModel
from bpvar.graph import (Edge, apply_diff, block_tree, build, diff, enumerate_traces,
                         isomorphic, trace_equivalent, validate_structure)
from bpvar.graph.rewrite import delete_node

from conftest import golden
from oracles import token_game_traces
from strategies import models

ALL_GOLDENS = [(c, v) for c, n in (("vehicle", 4), ("healthcare", 4), ("ebusiness", 6))
               for v in (f"V{i}" for i in range(n))]


def seq(*labels):
    nodes = [("s", "start")] + [(l, "task") for l in labels] + [("e", "end")]
    ids = [n[0] for n in nodes]
    return build("seq", nodes, list(zip(ids, ids[1:])))


def and_ab():
    return build("and", [("s", "start"), ("g1", "and"), ("A", "task"), ("B", "task"),
                         ("g2", "and"), ("e", "end")],
                 [("s", "g1"), ("g1", "A"), ("g1", "B"), ("A", "g2"), ("B", "g2"),
                  ("g2", "e")])


def renamed(model, prefix="x_"):
    mapping = {n.id: prefix + n.id for n in model.nodes}
    return model.evolve(nodes=[replace(n, id=mapping[n.id]) for n in model.nodes],
                        edges=[Edge(mapping[e.source], mapping[e.target], e.guard)
                               for e in model.edges])


# -- validate_structure ------------------------------------------------------

def test_vehicle_base_is_valid():
    assert validate_structure(golden("vehicle", "V0")) == []


@pytest.mark.parametrize("case,variant", ALL_GOLDENS)
def test_goldens_are_valid_and_structured(case, variant):
    model = golden(case, variant)
    assert validate_structure(model) == []
    block_tree(model)


def test_dangling_edge_reported_once():
    m = seq("A")
    m = m.evolve(edges=list(m.edges) + [Edge("A", "X")])
    got = [(v.rule, v.detail) for v in validate_structure(m) if v.rule.startswith("dangling")]
    assert got == [("dangling-target", "X")]


def test_two_starts():
    m = build("m", [("s", "start"), ("s2", "start"), ("g", "xor"), ("A", "task"),
                    ("e", "end")],
              [("s", "g"), ("s2", "g"), ("g", "A"), ("A", "e")])
    rules = [v.rule for v in validate_structure(m)]
    assert rules.count("start-count") == 1


def test_report_is_sorted():
    m = build("m", [("s", "start"), ("A", "task")], [("s", "A"), ("A", "A"), ("A", "Z")])
    report = validate_structure(m)
    keys = [(v.element, v.rule, v.detail) for v in report]
    assert keys == sorted(keys) and report


# -- traces ------------------------------------------------------------------

def test_sequence_trace():
    assert enumerate_traces(seq("A", "B")).traces == {("A", "B")}


def test_and_interleavings():
    assert enumerate_traces(and_ab()).traces == {("A", "B"), ("B", "A")}


def test_healthcare_base_has_twelve_traces():
    traces = enumerate_traces(golden("healthcare", "V0")).traces
    tests = ("X-ray", "MRT", "Sonography")
    head = ("Admission of the patient", "Anamnesis and Clinical Examination")
    tail = ("Initial Treatment and Operation planning", "Operative Treatment")
    expected = {head + p + t for p in itertools.permutations(tests) for t in ((), tail)}
    assert len(traces) == 12
    assert traces == expected


def test_or_split_covers_nonempty_subsets():
    m = build("or", [("s", "start"), ("g1", "or"), ("A", "task"), ("B", "task"),
                     ("g2", "or"), ("e", "end")],
              [("s", "g1"), ("g1", "A"), ("g1", "B"), ("A", "g2"), ("B", "g2"), ("g2", "e")])
    assert enumerate_traces(m).traces == {("A",), ("B",), ("A", "B"), ("B", "A")}


def test_cycle_rejected():
    m = build("c", [("s", "start"), ("g1", "xor"), ("A", "task"), ("g2", "xor"),
                    ("e", "end")],
              [("s", "g1"), ("g1", "A"), ("A", "g2"), ("g2", "g1"), ("g2", "e")])
    with pytest.raises((CyclicModel, UnstructuredModel)):
        enumerate_traces(m)


def test_overflow_is_flagged():
    result = enumerate_traces(golden("healthcare", "V0"), max_traces=5)
    assert result.overflow and len(result.traces) <= 5
    assert enumerate_traces(seq("A", "B", "C"), max_len=2).overflow


@pytest.mark.parametrize("case,variant", ALL_GOLDENS)
def test_traces_agree_with_token_game(case, variant):
    model = golden(case, variant)
    assert enumerate_traces(model).traces == token_game_traces(model)


@settings(max_examples=150, deadline=None)
@given(models)
def test_random_models_agree_with_token_game(model):
    assert validate_structure(model) == []
    assert enumerate_traces(model).traces == token_game_traces(model)


@pytest.mark.parametrize("case,variant", ALL_GOLDENS)
def test_and_blocks_yield_all_orderings(case, variant):
    model = golden(case, variant)
    traces = enumerate_traces(model).traces
    for g in model.nodes:
        if g.gateway_kind != "and" or len(model.out_edges(g.id)) < 2:
            continue
        branch = [model.node(t) for t in model.successors(g.id)]
        joins = {tuple(model.successors(b.id)) for b in branch}
        if any(b.kind != "task" for b in branch) or len(joins) != 1:
            continue
        labels = [b.label for b in branch]
        seen = {tuple(x for x in t if x in labels) for t in traces}
        assert seen == set(itertools.permutations(labels))


# -- isomorphism -------------------------------------------------------------

def test_renamed_ids_are_isomorphic():
    base = golden("vehicle", "V0")
    assert isomorphic(base, renamed(base))


def test_maintenance_deleted_not_isomorphic():
    base = golden("vehicle", "V0")
    node = base.nodes_by_label("Maintenance")[0]
    assert not isomorphic(base, delete_node(base, node.id))


def test_attribute_value_matters():
    base = golden("vehicle", "V0")
    diag = base.nodes_by_label("Diagnosis")[0]
    changed = base.with_node(replace(diag, attributes={"checklist": "type2"}))
    assert not isomorphic(base, changed)


def test_edge_guard_matters():
    base = golden("healthcare", "V0")
    edges = [replace(e, guard=None) for e in base.edges]
    assert not isomorphic(base, base.evolve(edges=edges))


def test_isomorphism_is_an_equivalence_on_the_corpus():
    models = [golden(c, v) for c, v in ALL_GOLDENS]
    models += [renamed(m) for m in models[:3]]
    rel = [[bool(isomorphic(a, b)) for b in models] for a in models]
    n = len(models)
    for i in range(n):
        assert rel[i][i]
        for j in range(n):
            assert rel[i][j] == rel[j][i]
            for k in range(n):
                if rel[i][j] and rel[j][k]:
                    assert rel[i][k]
    # isomorphic models share trace sets
    for i, j in itertools.product(range(n), repeat=2):
        if rel[i][j]:
            assert trace_equivalent(models[i], models[j])


@settings(max_examples=60, deadline=None)
@given(models, st.text(alphabet="xyz_", min_size=1, max_size=4))
def test_renaming_preserves_isomorphism(model, prefix):
    assert isomorphic(model, renamed(model, prefix))


# -- diff --------------------------------------------------------------------

def test_diff_vehicle_base_to_variant2():
    d = diff(golden("vehicle", "V0"), golden("vehicle", "V2"))
    assert [x.label for x in d if x.kind == "node-added"] == ["Final check"]
    assert not [x for x in d if x.kind in ("node-removed", "attribute-changed")]
    edges = {(x.kind, x.label, x.target) for x in d if x.kind.startswith("edge")}
    assert edges == {("edge-removed", "and_join", "Hand over"),
                     ("edge-added", "and_join", "Final check"),
                     ("edge-added", "Final check", "Hand over")}


def test_diff_vehicle_base_to_variant1():
    d = diff(golden("vehicle", "V0"), golden("vehicle", "V1"))
    kinds = {(x.kind, x.label, x.attribute) for x in d if not x.kind.startswith("edge")}
    # the AND split/join dissolve along with the Maintenance branch
    assert kinds == {("node-removed", "Maintenance", ""),
                     ("node-removed", "and_split", ""), ("node-removed", "and_join", ""),
                     ("attribute-changed", "Diagnosis", "checklist"),
                     ("attribute-changed", "Repair", "checklist")}
    assert any(x.kind.startswith("edge") for x in d)


def test_identical_models_have_empty_diff():
    base = golden("healthcare", "V0")
    assert diff(base, base) == []


def test_ambiguous_labels():
    m = build("m", [("s", "start"), ("a", "task", "A"), ("b", "task", "A"), ("e", "end")],
              [("s", "a"), ("a", "b"), ("b", "e")])
    with pytest.raises(AmbiguousLabels):
        diff(m, m)


@pytest.mark.parametrize("case", ["vehicle", "healthcare", "ebusiness"])
def test_diff_patch_round_trip(case):
    n = {"vehicle": 4, "healthcare": 4, "ebusiness": 6}[case]
    models = [golden(case, f"V{i}") for i in range(n)]
    for a, b in itertools.product(models, repeat=2):
        d = diff(a, b)
        assert (d == []) == bool(isomorphic(a, b))
        assert isomorphic(apply_diff(a, d), b)
